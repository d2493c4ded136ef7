"""Prime-field arithmetic and small invertible kernel matrices.

Field elements are plain Python ints in [0, q); the modulus lives in a
PrimeField descriptor.  Kernels are small k x k matrices over the field with
their inverse precomputed at construction.
"""

from __future__ import annotations

import numpy as np

from .errors import CompositeModulus, DimensionMismatch, SingularKernel

MAX_MODULUS = 251  # symbols are stored as single bytes


def _is_prime(n: int) -> bool:
    """Trial division; the moduli here never exceed MAX_MODULUS."""
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


class PrimeField:
    """Descriptor for GF(q) with q prime, q <= 251.

    Provides modular add/sub/mul/neg/inv on ints.  Inverses are cached in a
    table at construction.  Immutable after construction.
    """

    def __init__(self, q: int):
        if q < 2 or q > MAX_MODULUS or not _is_prime(q):
            raise CompositeModulus(f"modulus must be a prime <= {MAX_MODULUS}, got {q}")
        self.q = q
        # pow(a, -1, q) is the extended-Euclid inverse
        self._inv_table = [0] + [pow(a, -1, q) for a in range(1, q)]

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.q

    def neg(self, a: int) -> int:
        return (-a) % self.q

    def inv(self, a: int) -> int:
        if a % self.q == 0:
            raise ZeroDivisionError("inverse of zero")
        return self._inv_table[a % self.q]

    def __eq__(self, other):
        return isinstance(other, PrimeField) and other.q == self.q

    def __repr__(self):
        return f"PrimeField({self.q})"


def _invert_matrix(entries, q: int):
    """Invert a k x k integer matrix mod q by Gauss-Jordan elimination."""
    k = len(entries)
    aug = [[entries[r][c] % q for c in range(k)] + [1 if c == r else 0 for c in range(k)]
           for r in range(k)]
    for col in range(k):
        pivot = next((r for r in range(col, k) if aug[r][col] % q != 0), None)
        if pivot is None:
            raise SingularKernel("kernel matrix is singular mod %d" % q)
        aug[col], aug[pivot] = aug[pivot], aug[col]
        piv_inv = pow(aug[col][col], -1, q)
        aug[col] = [(x * piv_inv) % q for x in aug[col]]
        for r in range(k):
            if r != col and aug[r][col] % q != 0:
                factor = aug[r][col]
                aug[r] = [(aug[r][c] - factor * aug[col][c]) % q for c in range(2 * k)]
    return [row[k:] for row in aug]


class KernelMatrix:
    """Invertible k x k mixing matrix over a prime field.

    The inverse is computed at construction and the product M * M^-1 is
    checked against the identity.  Immutable after construction.
    """

    def __init__(self, field: PrimeField, entries):
        self.field = field
        q = field.q
        k = len(entries)
        if any(len(row) != k for row in entries):
            raise DimensionMismatch("kernel entries must form a square matrix")
        self.k = k
        self.entries = np.array([[int(e) % q for e in row] for row in entries], dtype=np.uint8)
        self.inverse = np.array(_invert_matrix([list(map(int, row)) for row in self.entries], q),
                                dtype=np.uint8)
        prod = (self.entries.astype(np.int64) @ self.inverse.astype(np.int64)) % q
        assert np.array_equal(prod, np.eye(k, dtype=np.int64)), "inverse check failed"

    def mat_vec(self, v, inverse: bool = False):
        """Multiply M (or M^-1) by a length-k vector over the field."""
        if len(v) != self.k:
            raise DimensionMismatch(f"expected vector of length {self.k}, got {len(v)}")
        mat = self.inverse if inverse else self.entries
        q = self.field.q
        return [sum(int(mat[r][c]) * int(v[c]) for c in range(self.k)) % q
                for r in range(self.k)]

    def __repr__(self):
        return f"KernelMatrix(q={self.field.q}, k={self.k})"


def default_kernel(field: PrimeField) -> KernelMatrix:
    """The 2x2 kernel [[1,1],[0,1]], valid over every prime field.

    This orientation puts the combining (sum) row first, which is what makes
    natural-order successive cancellation polarize under the interleaved
    index convention used by the transform module; the transposed orientation
    [[1,0],[1,1]] is an equally valid kernel but yields no compression when
    decoded in natural order.
    """
    return KernelMatrix(field, [[1, 1], [0, 1]])
