"""Successive-cancellation decoder over the Kronecker-power transform.

Coordinates of the transformed vector U are processed in the transform's
natural index order.  At each coordinate the exact conditional distribution
of U_p given the already-decided prefix is computed under a product prior on
Z, via a recursive tree that memoizes per-branch conditionals: each tree node
asks its k children for the conditional of their next output symbol, combines
them through the kernel by direct enumeration of the q^k input combinations,
and feeds the decided symbols back down.  Total work is O(m log m) node
updates of O(q^k * k) arithmetic each.

Distributions are plain lists of floats and every intermediate table is
renormalized, so the decoder is deterministic across platforms; argmax ties
break toward the smallest field value.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch
from .transform import TransformPlan, polar_inverse, polar_transform

UNSPECIFIED = -1


class PartialVector:
    """Length-m vector over F_q with unspecified entries marked by -1."""

    def __init__(self, values):
        self.values = [int(v) for v in values]
        self.specified = [v != UNSPECIFIED for v in self.values]

    @classmethod
    def from_sparse(cls, m: int, positions, symbols):
        values = [UNSPECIFIED] * m
        for p, s in zip(positions, symbols):
            values[p] = int(s)
        return cls(values)

    @property
    def specified_set(self):
        return [p for p, s in enumerate(self.specified) if s]

    def __len__(self):
        return len(self.values)


class _KernelTables:
    """Enumeration tables for one kernel application.

    combo index c ranges over the q^k assignments of the kernel input
    (w_0 ... w_{k-1}), with w_0 as the most significant base-q digit.
    """

    def __init__(self, kernel):
        q, k = kernel.field.q, kernel.k
        self.q, self.k = q, k
        self.ncombo = q ** k
        ent = kernel.entries.astype(int)
        # out_sym[s][c] = kernel output s for combo c
        self.out_sym = []
        for s in range(k):
            syms = []
            for c in range(self.ncombo):
                digits = []
                cc = c
                for _ in range(k):
                    digits.append(cc % q)
                    cc //= q
                digits.reverse()  # digits[r] = w_r
                syms.append(sum(int(ent[s][r]) * digits[r] for r in range(k)) % q)
            self.out_sym.append(syms)

    def marginal(self, joint, s):
        """Distribution of kernel output s under a joint table over combos."""
        dist = [0.0] * self.q
        syms = self.out_sym[s]
        for c, p in enumerate(joint):
            if p:
                dist[syms[c]] += p
        return dist


_TABLE_CACHE: dict = {}


def _tables(kernel) -> _KernelTables:
    key = (kernel.field.q, kernel.entries.tobytes())
    if key not in _TABLE_CACHE:
        _TABLE_CACHE[key] = _KernelTables(kernel)
    return _TABLE_CACHE[key]


def _normalized(dist):
    total = sum(dist)
    if total <= 0.0:
        n = len(dist)
        return [1.0 / n] * n
    return [x / total for x in dist]


def _sc_node(kernel, tables, depth, priors):
    """Generator for one tree node: yields P(V_p | V_<p) for each output
    coordinate in order and receives the decided symbol via send()."""
    if depth == 0:
        yield _normalized(list(priors[0]))
        return
    q, k = tables.q, tables.k
    blocks = kernel.k ** (depth - 1)
    children = [_sc_node(kernel, tables, depth - 1, priors[r::k]) for r in range(k)]
    conds = [next(child) for child in children]
    for b in range(blocks):
        joint = [1.0] * tables.ncombo
        for r in range(k):
            cr = conds[r]
            stride = q ** (k - 1 - r)
            for c in range(tables.ncombo):
                joint[c] *= cr[(c // stride) % q]
        decided = [0] * k
        for s in range(k):
            val = yield _normalized(tables.marginal(joint, s))
            decided[s] = val
            syms = tables.out_sym[s]
            alive = 0.0
            for c in range(tables.ncombo):
                if syms[c] != val:
                    joint[c] = 0.0
                else:
                    alive += joint[c]
            if alive > 0.0:
                for c in range(tables.ncombo):
                    joint[c] /= alive
            else:
                # decided prefix has zero mass under the priors (corrupt or
                # adversarial input); fall back to uniform over the combos
                # still consistent with the decided outputs
                count = 0
                for c in range(tables.ncombo):
                    ok = all(tables.out_sym[t][c] == decided[t] for t in range(s + 1))
                    joint[c] = 1.0 if ok else 0.0
                    count += joint[c]
                for c in range(tables.ncombo):
                    joint[c] /= count
        w = kernel.mat_vec(decided, inverse=True)
        for r in range(k):
            if b + 1 < blocks:
                conds[r] = children[r].send(w[r])
            else:
                try:
                    children[r].send(w[r])
                except StopIteration:
                    pass


def _check_lengths(plan: TransformPlan, priors, length):
    if len(priors) != plan.m or length != plan.m:
        raise DimensionMismatch(
            f"expected {plan.m} priors and symbols, got {len(priors)} and {length}")
    if any(len(d) != plan.field.q for d in priors):
        raise DimensionMismatch("each prior must have q entries")


def sc_decode(plan: TransformPlan, priors, u: PartialVector):
    """Decode a partially specified transformed vector under per-coordinate priors.

    Specified coordinates of u are pinned; unspecified ones take the argmax of
    their conditional (ties toward the smallest symbol).  Returns the pair
    (z_hat, u_hat) with z_hat the inverse transform of the decided u_hat.
    """
    _check_lengths(plan, priors, len(u))
    gen = _sc_node(plan.kernel, _tables(plan.kernel), plan.t,
                   [list(d) for d in priors])
    u_hat = [0] * plan.m
    cond = next(gen)
    for p in range(plan.m):
        if u.specified[p]:
            val = u.values[p]
        else:
            val = max(range(plan.field.q), key=cond.__getitem__)
        u_hat[p] = val
        if p + 1 < plan.m:
            cond = gen.send(val)
        else:
            try:
                gen.send(val)
            except StopIteration:
                pass
    u_arr = np.array(u_hat, dtype=np.uint8)
    return polar_inverse(plan, u_arr), u_arr


def sc_scan(plan: TransformPlan, priors, z_true):
    """Genie-aided pass: pin every coordinate to the transform of z_true and
    return the m conditional distributions seen along the way."""
    _check_lengths(plan, priors, len(z_true))
    u_true = polar_transform(plan, np.asarray(z_true))
    gen = _sc_node(plan.kernel, _tables(plan.kernel), plan.t,
                   [list(d) for d in priors])
    conds = []
    cond = next(gen)
    for p in range(plan.m):
        conds.append(cond)
        if p + 1 < plan.m:
            cond = gen.send(int(u_true[p]))
        else:
            try:
                gen.send(int(u_true[p]))
            except StopIteration:
                pass
    return conds


def _scan_batch_node(q, k, tables_a, depth, priors, z):
    """Batched genie scan: priors (..., m_d, q), z (..., m_d).

    Returns (conds (..., m_d, q), u_true (..., m_d)).  numpy throughout; used
    by the Monte-Carlo preprocessor where many sampled sequences are scanned
    at once.
    """
    if depth == 0:
        total = priors.sum(axis=-1, keepdims=True)
        return priors / np.where(total > 0, total, 1.0), z.copy()
    m_d = z.shape[-1]
    blocks = m_d // k
    child = [_scan_batch_node(q, k, tables_a, depth - 1, priors[..., r::k, :], z[..., r::k])
             for r in range(k)]
    conds_in = [c[0] for c in child]   # (..., blocks, q)
    w_true = [c[1] for c in child]     # (..., blocks)
    out = np.empty(priors.shape[:-2] + (m_d, q))
    u_true = np.empty(z.shape, dtype=z.dtype)
    for b in range(blocks):
        joint = conds_in[0][..., b, :]
        for r in range(1, k):
            joint = joint[..., :, None] * conds_in[r][..., b, None, :]
        joint = joint.reshape(joint.shape[:-k] + (q ** k,)) if k > 1 else joint
        w_block = [w[..., b] for w in w_true]
        for s in range(k):
            # true output symbol for this batch
            ent = tables_a["entries"]
            val = sum(int(ent[s][r]) * w_block[r] for r in range(k)) % q
            cond = joint @ tables_a["proj"][s]  # (..., q)
            total = cond.sum(axis=-1, keepdims=True)
            out[..., b * k + s, :] = cond / np.where(total > 0, total, 1.0)
            u_true[..., b * k + s] = val
            mask = tables_a["proj"][s].T[val]  # (..., q^k)
            joint = joint * mask
            jt = joint.sum(axis=-1, keepdims=True)
            joint = joint / np.where(jt > 0, jt, 1.0)
    return out, u_true


def sc_scan_batch(plan: TransformPlan, priors: np.ndarray, z_true: np.ndarray):
    """Vectorized genie scan over leading batch axes.

    priors has shape (..., m, q) and z_true shape (..., m); returns the
    conditionals with shape (..., m, q).  Matches sc_scan coordinate-wise.
    """
    q, k = plan.field.q, plan.kernel.k
    if priors.shape[-2] != plan.m or z_true.shape[-1] != plan.m:
        raise DimensionMismatch("priors/z_true do not match the plan length")
    tab = _tables(plan.kernel)
    proj = []
    for s in range(k):
        p = np.zeros((q ** k, q))
        p[np.arange(q ** k), tab.out_sym[s]] = 1.0
        proj.append(p)
    tables_a = {"entries": plan.kernel.entries.astype(int), "proj": proj}
    conds, _ = _scan_batch_node(q, k, tables_a, plan.t,
                                np.asarray(priors, dtype=float),
                                np.asarray(z_true).astype(np.int64))
    return conds
