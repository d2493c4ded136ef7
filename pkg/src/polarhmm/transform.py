"""Kronecker-power transform and its inverse in O(m log m) field operations.

Index convention (frozen for the whole pipeline): the recursion splits a
length-m vector into k interleaved sub-vectors by index mod k, transforms
each recursively, then applies the kernel across the k sub-results at each
position; kernel output s at block position b lands at index b*k + s.  With
this decimation-in-time order the result equals the dense Kronecker power
applied to the vector, with no extra permutation.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, UnspecifiedSymbol
from .field import KernelMatrix


class TransformPlan:
    """Kernel plus depth t; operates on vectors of length m = k**t."""

    def __init__(self, kernel: KernelMatrix, t: int):
        if t < 0:
            raise ValueError("depth must be non-negative")
        self.kernel = kernel
        self.t = t
        self.m = kernel.k ** t

    @property
    def field(self):
        return self.kernel.field

    def __repr__(self):
        return f"TransformPlan(q={self.field.q}, k={self.kernel.k}, t={self.t}, m={self.m})"


def _butterfly(mat: np.ndarray, q: int, k: int, z: np.ndarray) -> np.ndarray:
    """Apply (mat)^{kron t} to the last axis of z; mat is k x k int64."""
    m = z.shape[-1]
    if m == 1:
        return z.copy()
    sub = np.stack([_butterfly(mat, q, k, z[..., r::k]) for r in range(k)], axis=-1)
    # sub[..., b, r] -> out[..., b, s] = sum_r mat[s, r] * sub[..., b, r]
    out = (sub @ mat.T) % q
    return out.reshape(z.shape)


def polar_transform(plan: TransformPlan, z) -> np.ndarray:
    """Transform the last axis of z (length m) over F_q."""
    z = np.asarray(z)
    if z.shape[-1] != plan.m:
        raise DimensionMismatch(f"expected length {plan.m}, got {z.shape[-1]}")
    mat = plan.kernel.entries.astype(np.int64)
    return _butterfly(mat, plan.field.q, plan.kernel.k, z.astype(np.int64)).astype(np.uint8)


def _butterfly_inv(mat_inv: np.ndarray, q: int, k: int, u: np.ndarray) -> np.ndarray:
    m = u.shape[-1]
    if m == 1:
        return u.copy()
    blocks = u.reshape(u.shape[:-1] + (m // k, k))
    w = (blocks @ mat_inv.T) % q  # w[..., b, r]
    out = np.empty_like(u)
    for r in range(k):
        out[..., r::k] = _butterfly_inv(mat_inv, q, k, w[..., r])
    return out


def polar_inverse(plan: TransformPlan, u) -> np.ndarray:
    """Invert polar_transform on the last axis of u; rejects unspecified entries."""
    u = np.asarray(u)
    if u.shape[-1] != plan.m:
        raise DimensionMismatch(f"expected length {plan.m}, got {u.shape[-1]}")
    work = u.astype(np.int64)
    if (work < 0).any() or (work >= plan.field.q).any():
        raise UnspecifiedSymbol("all entries must be field symbols in [0, q)")
    mat_inv = plan.kernel.inverse.astype(np.int64)
    return _butterfly_inv(mat_inv, plan.field.q, plan.kernel.k, work).astype(np.uint8)


def dense_kronecker(plan: TransformPlan, inverse: bool = False) -> np.ndarray:
    """The full m x m transform matrix, built by repeated Kronecker products.

    Exponential-size reference for tests and tiny instances only.
    """
    base = (plan.kernel.inverse if inverse else plan.kernel.entries).astype(np.int64)
    mat = np.eye(1, dtype=np.int64)
    for _ in range(plan.t):
        mat = np.kron(mat, base) % plan.field.q
    return mat
