"""Hidden Markov source model: sampling, forward inference, entropy estimation.

Beliefs and symbol distributions are plain lists of floats.  The Bayesian
update is written with explicit loops so one update costs O(l^2) arithmetic,
which is also what both decompressors rely on for their runtime contracts:
the fast one performs a single update per symbol, the baseline re-folds whole
prefixes.  Transition matrices are column-stochastic, so advancing a belief
is literally the matrix-vector product (Pi @ v).
"""

from __future__ import annotations

import json
import math
import random

import numpy as np

from .errors import FormatError, ImpossibleObservation

_COL_TOL = 1e-12
_STAT_TOL = 1e-9


class MarkovSource:
    """Hidden Markov source over F_q.

    Parameters
    ----------
    q : alphabet modulus (outputs are symbols in [0, q)).
    transitions : l x l column-stochastic matrix; transitions[i][j] is the
        probability of moving to state i from state j.
    stationary : stationary distribution of the chain (validated, not computed).
    outputs : per-state emission distributions, l rows of q probabilities.
    """

    def __init__(self, q, transitions, stationary, outputs):
        self.q = int(q)
        self.transitions = [[float(x) for x in row] for row in transitions]
        self.stationary = [float(x) for x in stationary]
        self.outputs = [[float(x) for x in row] for row in outputs]
        self.num_states = len(self.stationary)
        self._validate()
        # numpy copies for the vectorized preprocessing paths
        self.transitions_np = np.array(self.transitions)
        self.outputs_np = np.array(self.outputs)
        self.stationary_np = np.array(self.stationary)

    def _validate(self):
        l, q = self.num_states, self.q
        if len(self.transitions) != l or any(len(r) != l for r in self.transitions):
            raise FormatError("transition matrix must be l x l")
        if len(self.outputs) != l or any(len(r) != q for r in self.outputs):
            raise FormatError("outputs must be l x q")
        for j in range(l):
            col = [self.transitions[i][j] for i in range(l)]
            if any(x < 0 for x in col) or abs(sum(col) - 1.0) > _COL_TOL:
                raise FormatError(f"transition column {j} is not a distribution")
        if any(x < 0 for x in self.stationary) or abs(sum(self.stationary) - 1.0) > _COL_TOL:
            raise FormatError("stationary vector is not a distribution")
        for i, row in enumerate(self.outputs):
            if any(x < 0 for x in row) or abs(sum(row) - 1.0) > _COL_TOL:
                raise FormatError(f"output distribution of state {i} does not sum to 1")
        for i in range(l):
            fixed = sum(self.transitions[i][j] * self.stationary[j] for j in range(l))
            if abs(fixed - self.stationary[i]) > _STAT_TOL:
                raise FormatError("stationary vector is not fixed by the transition matrix")

    def to_dict(self):
        return {
            "q": self.q,
            "states": self.num_states,
            "pi": self.stationary,
            "Pi": self.transitions,
            "outputs": self.outputs,
        }


def save_source(source: MarkovSource, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(source.to_dict(), fh, indent=1)
        fh.write("\n")


def load_source(path) -> MarkovSource:
    """Load and validate a JSON source specification (see README for the schema)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read source spec {path}: {exc}") from exc
    try:
        src = MarkovSource(doc["q"], doc["Pi"], doc["pi"], doc["outputs"])
    except KeyError as exc:
        raise FormatError(f"source spec missing field {exc}") from exc
    if src.num_states != int(doc["states"]):
        raise FormatError("states field disagrees with pi length")
    return src


def belief_update(source: MarkovSource, v, y: int):
    """One Bayesian filtering step: posterior over states after observing y.

    Returns the normalized vector ((Pi v)_z * S_z(y)) / normalizer.
    """
    trans, out = source.transitions, source.outputs
    l = source.num_states
    w = [0.0] * l
    for z in range(l):
        row = trans[z]
        acc = 0.0
        for x in range(l):
            acc += row[x] * v[x]
        w[z] = acc * out[z][y]
    total = 0.0
    for x in w:
        total += x
    if total <= 0.0:
        raise ImpossibleObservation(f"symbol {y} has zero likelihood under all states")
    return [x / total for x in w]


def predictive(source: MarkovSource, v):
    """Next-symbol distribution: sum_z (Pi v)_z * S_z, over F_q."""
    trans, out = source.transitions, source.outputs
    l, q = source.num_states, source.q
    w = [0.0] * l
    for z in range(l):
        row = trans[z]
        acc = 0.0
        for x in range(l):
            acc += row[x] * v[x]
        w[z] = acc
    dist = [0.0] * q
    for z in range(l):
        wz = w[z]
        row = out[z]
        for y in range(q):
            dist[y] += wz * row[y]
    return dist


def forward_infer(source: MarkovSource, n: int, y):
    """Distribution of symbol n given the first n-1 observations.

    Exactly the fold of belief_update over y starting from the stationary
    distribution, followed by predictive; cost O(n l^2).
    """
    if len(y) != n - 1:
        raise ValueError(f"expected {n - 1} observations, got {len(y)}")
    v = list(source.stationary)
    for obs in y:
        v = belief_update(source, v, int(obs))
    return predictive(source, v)


def sample(source: MarkovSource, n: int, rng_seed: int):
    """Draw n symbols and the hidden state path; deterministic given the seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = random.Random(rng_seed)
    l, q = source.num_states, source.q
    states = np.empty(n, dtype=np.int64)
    symbols = np.empty(n, dtype=np.uint8)

    def draw(dist, limit):
        u = rng.random()
        acc = 0.0
        for i in range(limit - 1):
            acc += dist[i]
            if u < acc:
                return i
        return limit - 1

    state = draw(source.stationary, l)
    for step in range(n):
        states[step] = state
        symbols[step] = draw(source.outputs[state], q)
        if step + 1 < n:
            state = draw([source.transitions[i][state] for i in range(l)], l)
    return symbols, states


def sample_many(source: MarkovSource, n: int, trials: int, rng_seed: int) -> np.ndarray:
    """Vectorized sampling of `trials` independent length-n sequences.

    Used by the Monte-Carlo preprocessor; per-step inverse-CDF over a batch.
    """
    rng = np.random.default_rng(rng_seed)
    l = source.num_states
    cum_trans = np.cumsum(source.transitions_np, axis=0)  # (next, cur)
    cum_out = np.cumsum(source.outputs_np, axis=1)        # (state, symbol)
    cum_pi = np.cumsum(source.stationary_np)

    states = np.searchsorted(cum_pi, rng.random(trials), side="right")
    states = np.minimum(states, l - 1)
    symbols = np.empty((trials, n), dtype=np.uint8)
    for step in range(n):
        u = rng.random(trials)
        symbols[:, step] = np.minimum(
            (cum_out[states] <= u[:, None]).sum(axis=1), source.q - 1)
        if step + 1 < n:
            u = rng.random(trials)
            states = np.minimum((cum_trans[:, states] <= u).sum(axis=0), l - 1)
    return symbols


def entropy_rate_estimate(source: MarkovSource, n: int, trials: int, rng_seed: int) -> float:
    """Empirical entropy rate in q-ary symbols per source symbol.

    Averages -(1/n) sum_t log_q P(Z_t | Z_<t) over sampled sequences, with the
    conditionals computed by forward filtering.
    """
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be >= 1")
    log_q = math.log(source.q)
    total = 0.0
    for trial in range(trials):
        symbols, _ = sample(source, n, rng_seed + trial)
        v = list(source.stationary)
        loss = 0.0
        for step in range(n):
            y = int(symbols[step])
            dist = predictive(source, v)
            loss -= math.log(max(dist[y], 1e-300)) / log_q
            if step + 1 < n:
                v = belief_update(source, v, y)
        total += loss / n
    return total / trials
