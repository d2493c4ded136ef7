"""Hidden-Markov source tests: validation, filtering oracles, sampling stats."""

import itertools
import math
import random

import numpy as np
import pytest

from polarhmm.errors import FormatError, ImpossibleObservation
from polarhmm.hmm import (MarkovSource, belief_update, entropy_rate_estimate,
                          forward_infer, load_source, predictive, sample,
                          sample_many, save_source)


def sticky_source(stay=0.95):
    flip = 1.0 - stay
    return MarkovSource(
        2,
        [[stay, flip], [flip, stay]],
        [0.5, 0.5],
        [[0.95, 0.05], [0.05, 0.95]],
    )


def random_source(rng, q, l):
    """Column-stochastic transitions with a numerically computed fixed point."""
    cols = np.array([[rng.random() + 0.1 for _ in range(l)] for _ in range(l)])
    cols = cols / cols.sum(axis=0, keepdims=True)
    pi = np.full(l, 1.0 / l)
    for _ in range(500):
        pi = cols @ pi
    pi = pi / pi.sum()
    outs = np.array([[rng.random() + 0.05 for _ in range(q)] for _ in range(l)])
    outs = outs / outs.sum(axis=1, keepdims=True)
    return MarkovSource(q, cols.tolist(), pi.tolist(), outs.tolist())


def path_enumeration_conditional(source, n, y):
    """Independent oracle: P(Z_n = a | Z_<n = y) by summing over all hidden
    state paths of length n.  Exponential in n; test sizes only."""
    l, q = source.num_states, source.q
    dist = [0.0] * q
    for a in range(q):
        obs = list(y) + [a]
        total = 0.0
        for path in itertools.product(range(l), repeat=n):
            p = source.stationary[path[0]]
            for step in range(1, n):
                p *= source.transitions[path[step]][path[step - 1]]
            for step in range(n):
                p *= source.outputs[path[step]][obs[step]]
            total += p
        dist[a] = total
    norm = sum(dist)
    return [x / norm for x in dist]


def test_validation_rejects_bad_inputs():
    with pytest.raises(FormatError):  # column does not sum to 1
        MarkovSource(2, [[0.9, 0.1], [0.2, 0.9]], [0.5, 0.5],
                     [[0.5, 0.5], [0.5, 0.5]])
    with pytest.raises(FormatError):  # pi not stationary
        MarkovSource(2, [[0.9, 0.1], [0.1, 0.9]], [0.9, 0.1],
                     [[0.5, 0.5], [0.5, 0.5]])
    with pytest.raises(FormatError):  # emission row does not sum to 1
        MarkovSource(2, [[0.9, 0.1], [0.1, 0.9]], [0.5, 0.5],
                     [[0.6, 0.5], [0.5, 0.5]])
    with pytest.raises(FormatError):  # ragged transition matrix
        MarkovSource(2, [[1.0], [0.0, 1.0]], [0.5, 0.5],
                     [[0.5, 0.5], [0.5, 0.5]])


def test_forward_infer_matches_path_enumeration():
    rng = random.Random(101)
    checked = 0
    for _ in range(200):
        q = rng.choice([2, 3])
        l = rng.choice([2, 3])
        src = random_source(rng, q, l)
        n = rng.randrange(1, 11)
        y = [rng.randrange(q) for _ in range(n - 1)]
        got = forward_infer(src, n, y)
        want = path_enumeration_conditional(src, n, y)
        assert max(abs(g - w) for g, w in zip(got, want)) < 1e-9
        checked += 1
    assert checked == 200


def test_forward_infer_is_exactly_the_update_fold():
    # bitwise identity, not approximate: forward_infer must be the same
    # floating-point computation as folding belief_update then predictive
    rng = random.Random(55)
    for _ in range(50):
        q, l = rng.choice([2, 3, 5]), rng.choice([2, 4, 8])
        src = random_source(rng, q, l)
        n = rng.randrange(1, 40)
        y = [rng.randrange(q) for _ in range(n - 1)]
        v = list(src.stationary)
        for obs in y:
            v = belief_update(src, v, obs)
        folded = predictive(src, v)
        direct = forward_infer(src, n, y)
        assert direct == folded


def test_belief_update_is_bayes_rule():
    rng = random.Random(9)
    for _ in range(50):
        src = random_source(rng, 3, 4)
        v = np.array([rng.random() for _ in range(4)])
        v = v / v.sum()
        y = rng.randrange(3)
        advanced = np.array(src.transitions) @ v
        lik = advanced * np.array(src.outputs)[:, y]
        want = lik / lik.sum()
        got = belief_update(src, v.tolist(), y)
        assert np.allclose(got, want, atol=1e-12)


def test_impossible_observation_raises():
    src = MarkovSource(2, [[1.0, 0.0], [0.0, 1.0]], [1.0, 0.0],
                       [[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(ImpossibleObservation):
        belief_update(src, [1.0, 0.0], 1)


def test_forward_infer_length_check():
    src = sticky_source()
    with pytest.raises(ValueError):
        forward_infer(src, 3, [0])


def test_sample_deterministic_and_in_range():
    src = sticky_source()
    s1, st1 = sample(src, 500, 42)
    s2, st2 = sample(src, 500, 42)
    assert np.array_equal(s1, s2) and np.array_equal(st1, st2)
    s3, _ = sample(src, 500, 43)
    assert not np.array_equal(s1, s3)
    assert s1.max() < 2 and st1.max() < 2


def test_sample_symbol_frequencies():
    # symmetric sticky source: both symbols appear half the time; check the
    # empirical frequency within 3 sigma of a conservative variance bound
    src = sticky_source()
    n = 20000
    symbols, states = sample(src, n, 7)
    freq = symbols.mean()
    # successive symbols are positively correlated; the effective sample size
    # shrinks by roughly (1+rho)/(1-rho) with rho ~= 0.81 for stay=0.95
    sigma = 0.5 / math.sqrt(n / 10.0)
    assert abs(freq - 0.5) < 3 * sigma
    # emissions: symbol equals state 95% of the time
    agree = (symbols == states).mean()
    assert abs(agree - 0.95) < 0.01


def test_sample_many_matches_marginals():
    src = sticky_source()
    block = sample_many(src, 200, 300, 11)
    assert block.shape == (300, 200)
    assert block.max() < 2
    freq = block.mean()
    assert abs(freq - 0.5) < 0.02
    # trials are independent, so column frequencies concentrate fast
    col_freq = block.mean(axis=0)
    assert abs(col_freq.mean() - 0.5) < 0.02


def test_entropy_rate_sticky_upper_bound():
    # the symbol process entropy rate is at most H(state flip) + H(emission
    # noise) = 2 * H_b(0.05) ~= 0.5729 bits; with emission noise it is also
    # well above H_b(0.05) alone
    src = sticky_source()
    h = entropy_rate_estimate(src, 400, 8, 3)
    hb = lambda p: -p * math.log2(p) - (1 - p) * math.log2(1 - p)
    assert hb(0.05) - 0.05 < h < 2 * hb(0.05) + 0.05


def test_entropy_rate_iid_uniform_is_one():
    src = MarkovSource(3, [[1.0]], [1.0], [[1 / 3, 1 / 3, 1 / 3]])
    h = entropy_rate_estimate(src, 100, 3, 0)
    assert abs(h - 1.0) < 1e-9


def test_entropy_rate_deterministic_is_zero():
    src = MarkovSource(2, [[1.0]], [1.0], [[1.0, 0.0]])
    assert entropy_rate_estimate(src, 100, 2, 0) == 0.0


def test_source_json_round_trip(tmp_path):
    src = sticky_source()
    path = tmp_path / "sticky.json"
    save_source(src, path)
    back = load_source(path)
    assert back.q == src.q
    assert back.transitions == src.transitions
    assert back.stationary == src.stationary
    assert back.outputs == src.outputs


def test_load_source_rejects_garbage(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("not json at all")
    with pytest.raises(FormatError):
        load_source(path)
    path.write_text('{"q": 2, "pi": [1.0]}')
    with pytest.raises(FormatError):
        load_source(path)
    path.write_text('{"q": 2, "states": 2, "pi": [1.0], "Pi": [[1.0]],'
                    ' "outputs": [[0.5, 0.5]]}')
    with pytest.raises(FormatError):
        load_source(path)
