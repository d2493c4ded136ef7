"""Command-line front end and benchmark harness.

Subcommands: gen-source, sample, preprocess, compress, decompress, verify,
bench.  Every command is deterministic given --seed and prints a single
machine-parsable key=value summary line; bench additionally emits a
tab-separated table.  Exit codes: 0 success, 2 round-trip mismatch, 3
file/format error.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import codec, hmm
from .errors import FormatError, InvalidPreset, PolarHMMError, StreamCorrupt
from .field import KernelMatrix, PrimeField, default_kernel
from .transform import TransformPlan

PRESETS = ("two-state-sticky", "iid-uniform", "deterministic", "random-stochastic")

EXIT_OK = 0
EXIT_MISMATCH = 2
EXIT_FORMAT = 3


def _spread(mass: float, q: int, main: int):
    """Distribution putting 1 - mass on `main` and mass uniformly elsewhere."""
    if q == 1:
        return [1.0]
    dist = [mass / (q - 1)] * q
    dist[main] = 1.0 - mass
    return dist


def make_preset(preset: str, q: int, states: int, seed: int) -> hmm.MarkovSource:
    """Build one of the named source presets (validated on construction)."""
    if preset == "deterministic":
        return hmm.MarkovSource(q, [[1.0]], [1.0], [[1.0] + [0.0] * (q - 1)])
    if preset == "iid-uniform":
        return hmm.MarkovSource(q, [[1.0]], [1.0], [[1.0 / q] * q])
    if preset == "two-state-sticky":
        stay, flip = 0.95, 0.05
        trans = [[stay, 1 - stay], [1 - stay, stay]]
        outputs = [_spread(flip, q, 0), _spread(flip, q, 1 % q)]
        return hmm.MarkovSource(q, trans, [0.5, 0.5], outputs)
    if preset == "random-stochastic":
        rng = np.random.default_rng(seed)
        l = states
        cols = 0.85 * np.eye(l) + 0.15 * rng.dirichlet(np.full(l, 0.5), size=l).T
        cols /= cols.sum(axis=0, keepdims=True)
        pi = stationary_of(cols)
        outputs = []
        for i in range(l):
            noise = rng.dirichlet(np.full(q, 0.5))
            row = 0.9 * np.eye(q)[i % q] + 0.1 * noise
            outputs.append((row / row.sum()).tolist())
        return hmm.MarkovSource(q, cols.tolist(), pi, outputs)
    raise InvalidPreset(f"unknown preset {preset!r} (choose from {', '.join(PRESETS)})")


def stationary_of(cols: np.ndarray):
    """Stationary distribution of a column-stochastic matrix via its
    dominant eigenvector, refined by power iteration."""
    vals, vecs = np.linalg.eig(cols)
    idx = int(np.argmin(np.abs(vals - 1.0)))
    pi = np.real(vecs[:, idx])
    pi = np.abs(pi)
    pi /= pi.sum()
    for _ in range(200):
        pi = cols @ pi
        pi /= pi.sum()
    return pi.tolist()


def parse_epsilon(text: str) -> Fraction:
    try:
        if "/" in text:
            num, den = text.split("/", 1)
            return Fraction(int(num), int(den))
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise FormatError(f"bad epsilon {text!r}; use NUM/DEN") from exc


def load_kernel(spec: str, q: int) -> KernelMatrix:
    field = PrimeField(q)
    if spec == "arikan":
        return default_kernel(field)
    try:
        with open(spec, "r", encoding="utf-8") as fh:
            entries = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read kernel file {spec}: {exc}") from exc
    return KernelMatrix(field, entries)


def _summary(cmd: str, **kv):
    parts = [cmd] + [f"{k}={v}" for k, v in kv.items()]
    print(" ".join(parts))


def cmd_gen_source(args) -> int:
    source = make_preset(args.preset, args.q, args.states, args.seed)
    hmm.save_source(source, args.out)
    _summary("gen-source", preset=args.preset, q=args.q,
             states=source.num_states, out=args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    source = hmm.load_source(args.source)
    symbols, _ = hmm.sample(source, args.n, args.seed)
    with open(args.out, "wb") as fh:
        fh.write(symbols.tobytes())
    _summary("sample", n=args.n, seed=args.seed, out=args.out)
    return EXIT_OK


def cmd_preprocess(args) -> int:
    source = hmm.load_source(args.source)
    kernel = load_kernel(args.kernel, source.q)
    plan = TransformPlan(kernel, args.t)
    eps = parse_epsilon(args.epsilon)
    start = time.perf_counter()
    aux = codec.preprocess(source, plan, eps, trials=args.trials,
                           rng_seed=args.seed, threshold=args.threshold)
    elapsed = time.perf_counter() - start
    aux.save(args.out)
    _summary("preprocess", n=aux.n, m=aux.m, retained=aux.payload_length,
             rate=f"{aux.estimated_rate:.4f}", seconds=f"{elapsed:.3f}",
             out=args.out)
    return EXIT_OK


def _read_symbols(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return np.frombuffer(fh.read(), dtype=np.uint8)


def cmd_compress(args) -> int:
    aux = codec.AuxInfo.load(args.aux)
    data = _read_symbols(args.data)
    z = codec.reshape(data, aux.m)
    start = time.perf_counter()
    stream = codec.compress(aux, z)
    elapsed = time.perf_counter() - start
    stream.save(args.out)
    _summary("compress", n=aux.n, payload=int(stream.payload.size),
             ratio=f"{stream.payload.size / aux.n:.4f}",
             seconds=f"{elapsed:.3f}", out=args.out)
    return EXIT_OK


def cmd_decompress(args) -> int:
    source = hmm.load_source(args.source)
    aux = codec.AuxInfo.load(args.aux)
    stream = codec.CompressedStream.load(args.stream)
    decomp = codec.fast_decompress if args.mode == "fast" else codec.baseline_decompress
    start = time.perf_counter()
    z_hat = decomp(source, aux, stream)
    elapsed = time.perf_counter() - start
    with open(args.out, "wb") as fh:
        fh.write(codec.flatten(z_hat).tobytes())
    _summary("decompress", mode=args.mode, n=aux.n,
             seconds=f"{elapsed:.3f}", out=args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    source = hmm.load_source(args.source)
    aux = codec.AuxInfo.load(args.aux)
    decomp = codec.fast_decompress if args.mode == "fast" else codec.baseline_decompress
    failures = 0
    for trial in range(args.trials):
        symbols, _ = hmm.sample(source, aux.n, args.seed + trial)
        z = codec.reshape(symbols, aux.m)
        stream = codec.compress(aux, z)
        z_hat = decomp(source, aux, stream)
        if not np.array_equal(z, z_hat):
            failures += 1
    _summary("verify", mode=args.mode, trials=args.trials, failures=failures,
             ok=args.trials - failures)
    return EXIT_OK if failures == 0 else EXIT_MISMATCH


@dataclass
class BenchRow:
    t: int
    n: int
    payload: int
    baseline_seconds: float
    fast_seconds: float
    match: bool


def time_decompressors(source, aux, stream, runs: int = 5):
    """Median wall time of both decompressors on one stream; also checks that
    their outputs agree.  Timing covers decompression only."""
    base_times, fast_times = [], []
    base_out = fast_out = None
    for _ in range(runs):
        start = time.perf_counter()
        base_out = codec.baseline_decompress(source, aux, stream)
        base_times.append(time.perf_counter() - start)
        start = time.perf_counter()
        fast_out = codec.fast_decompress(source, aux, stream)
        fast_times.append(time.perf_counter() - start)
    match = bool(np.array_equal(base_out, fast_out))
    return statistics.median(base_times), statistics.median(fast_times), match


def run_bench(source, kernel, t_values, epsilon: Fraction, runs: int,
              seed: int, trials: int | None = None,
              threshold: float | None = None):
    """Build aux once per size, then time both decompressors on one stream."""
    rows = []
    for idx, t in enumerate(sorted(t_values)):
        plan = TransformPlan(kernel, t)
        aux = codec.preprocess(source, plan, epsilon, trials=trials,
                               rng_seed=seed + idx, threshold=threshold)
        symbols, _ = hmm.sample(source, aux.n, seed + 1000 + idx)
        stream = codec.compress(aux, codec.reshape(symbols, aux.m))
        base_s, fast_s, match = time_decompressors(source, aux, stream, runs)
        rows.append(BenchRow(t, aux.n, int(stream.payload.size), base_s, fast_s, match))
    return rows


def print_bench(rows):
    print("t\tn\tpayload\tbaseline_s\tfast_s\tmatch")
    for r in rows:
        print(f"{r.t}\t{r.n}\t{r.payload}\t{r.baseline_seconds:.4f}"
              f"\t{r.fast_seconds:.4f}\t{int(r.match)}")
    for prev, cur in zip(rows, rows[1:]):
        growth = cur.n / prev.n
        _summary("bench-ratio", n_from=prev.n, n_to=cur.n, growth=f"{growth:.1f}",
                 baseline=f"{cur.baseline_seconds / prev.baseline_seconds:.2f}",
                 fast=f"{cur.fast_seconds / prev.fast_seconds:.2f}")


def cmd_bench(args) -> int:
    if args.source:
        source = hmm.load_source(args.source)
    else:
        source = make_preset(args.preset, args.q, args.states, args.seed)
    kernel = load_kernel(args.kernel, source.q)
    t_values = [int(x) for x in args.t_list.split(",")]
    rows = run_bench(source, kernel, t_values, parse_epsilon(args.epsilon),
                     args.runs, args.seed, trials=args.trials,
                     threshold=args.threshold)
    print_bench(rows)
    return EXIT_OK if all(r.match for r in rows) else EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polarhmm",
        description="Polar-transform compression toolkit for hidden Markov sources.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        if seed:
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("gen-source", help="write a source preset to a spec file")
    p.add_argument("--preset", required=True, choices=PRESETS)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--states", type=int, default=2,
                   help="state count for random-stochastic")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_gen_source)

    p = sub.add_parser("sample", help="sample raw symbols from a source")
    p.add_argument("--source", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("preprocess", help="build auxiliary (frozen-set) info")
    p.add_argument("--source", required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--epsilon", default="1/10", help="rational NUM/DEN")
    p.add_argument("--kernel", default="arikan", help="'arikan' or a JSON matrix file")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("compress", help="compress a raw symbol file")
    p.add_argument("--aux", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", help="decompress a stream")
    p.add_argument("--source", required=True)
    p.add_argument("--aux", required=True)
    p.add_argument("--stream", required=True)
    p.add_argument("--mode", choices=("baseline", "fast"), default="fast")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("verify", help="round-trip fresh samples and count failures")
    p.add_argument("--source", required=True)
    p.add_argument("--aux", required=True)
    p.add_argument("--mode", choices=("baseline", "fast"), default="fast")
    p.add_argument("--trials", type=int, default=20)
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="runtime-scaling benchmark of both decompressors")
    p.add_argument("--source", default=None, help="source spec file (overrides preset)")
    p.add_argument("--preset", default="two-state-sticky", choices=PRESETS)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--states", type=int, default=2)
    p.add_argument("--kernel", default="arikan")
    p.add_argument("--t-list", default="5,6,7", help="comma-separated depths")
    p.add_argument("--epsilon", default="1/10")
    p.add_argument("--trials", type=int, default=None,
                   help="preprocessing Monte-Carlo trials")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--runs", type=int, default=5)
    common(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, StreamCorrupt, InvalidPreset) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except PolarHMMError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH


if __name__ == "__main__":
    sys.exit(main())
