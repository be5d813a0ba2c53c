#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy twins.

Runs each hot kernel (PRG batch evaluation, MLP forward, fused MLP train
steps, small-ball counting) on both code paths and prints a speedup table.
Agreement between the paths is asserted on every case before timing.

Usage:
    python benchmarks/benchmark_kernels.py            # default sizes
    python benchmarks/benchmark_kernels.py --quick    # small sizes, 1 repeat
    python benchmarks/benchmark_kernels.py --output bench.json
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from prgforge import _kernels as K


def _time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_prg(n: int, m: int, d: int, rng) -> dict:
    seeds = (2 * rng.integers(0, 2, size=(n, m)) - 1).astype(np.int8)
    sets = np.sort(
        np.stack([rng.choice(m, size=5, replace=False) for _ in range(d)]),
        axis=1).astype(np.int64)
    table = (2 * rng.integers(0, 2, size=32) - 1).astype(np.int8)
    ref = K.prg_eval_batch_np(seeds, sets, table)
    if K.NUMBA_AVAILABLE:
        assert np.array_equal(ref, K.prg_eval_batch_nb(seeds, sets, table))
    return {
        "name": f"prg_eval_batch n={n} m={m} d={d}",
        "numpy": lambda: K.prg_eval_batch_np(seeds, sets, table),
        "numba": (lambda: K.prg_eval_batch_nb(seeds, sets, table))
        if K.NUMBA_AVAILABLE else None,
    }


def _mlp_state(d: int, width: int, depth: int, n_batch: int, rng):
    dims = [d] + [width] * depth + [1]
    Ws = [rng.standard_normal((o, i)) / np.sqrt(i)
          for i, o in zip(dims, dims[1:])]
    bs = [np.zeros(o) for o in dims[1:]]
    acts = [np.empty((n_batch, w)) for w in [d] + [width] * depth]
    return Ws, bs, acts


def bench_logits(n: int, d: int, width: int, depth: int, rng) -> dict:
    Ws, bs, _ = _mlp_state(d, width, depth, n, rng)
    X = rng.standard_normal((n, d))
    ref = K.mlp_logits_np(X, list(Ws), list(bs))
    if K.NUMBA_AVAILABLE:
        got = K.mlp_logits_nb(X, K.as_typed_list(Ws), K.as_typed_list(bs))
        assert np.allclose(ref, got, rtol=1e-10, atol=1e-12)
    return {
        "name": f"mlp_logits n={n} d={d} width={width} depth={depth}",
        "numpy": lambda: K.mlp_logits_np(X, list(Ws), list(bs)),
        "numba": (lambda: K.mlp_logits_nb(X, K.as_typed_list(Ws),
                                          K.as_typed_list(bs)))
        if K.NUMBA_AVAILABLE else None,
    }


def bench_train(steps: int, d: int, width: int, depth: int, rng) -> dict:
    n_batch = 256
    batches = rng.standard_normal((steps, n_batch, d))
    y = np.concatenate([np.ones(n_batch // 2), np.zeros(n_batch // 2)])

    def run(path: str):
        r = np.random.default_rng(0)
        Ws, bs, acts = _mlp_state(d, width, depth, n_batch, r)
        mWs = [np.zeros_like(W) for W in Ws]
        vWs = [np.zeros_like(W) for W in Ws]
        mbs = [np.zeros_like(b) for b in bs]
        vbs = [np.zeros_like(b) for b in bs]
        if path == "numpy":
            K.mlp_train_chunk_np(Ws, bs, mWs, vWs, mbs, vbs, batches, y,
                                 acts, 0, 1e-3, 0.9, 0.999, 1e-8)
        else:
            K.mlp_train_chunk_nb(
                K.as_typed_list(Ws), K.as_typed_list(bs), K.as_typed_list(mWs),
                K.as_typed_list(vWs), K.as_typed_list(mbs), K.as_typed_list(vbs),
                batches, y, K.as_typed_list(acts), 0, 1e-3, 0.9, 0.999, 1e-8)
        return Ws

    ref = run("numpy")
    if K.NUMBA_AVAILABLE:
        got = run("numba")
        for a, b in zip(ref, got):
            assert np.allclose(a, b, rtol=1e-8, atol=1e-10)
    return {
        "name": f"mlp_train_chunk steps={steps} d={d} width={width} "
                f"depth={depth}",
        "numpy": lambda: run("numpy"),
        "numba": (lambda: run("numba")) if K.NUMBA_AVAILABLE else None,
    }


def bench_count(n: int, d: int, n_centers: int, rng) -> dict:
    pts = rng.standard_normal((n, d))
    ctr = pts[rng.choice(n, size=n_centers, replace=False)]
    ref = K.count_within_np(pts, ctr, 0.5)
    if K.NUMBA_AVAILABLE:
        assert np.array_equal(ref, K.count_within_nb(pts, ctr, 0.5))
    return {
        "name": f"count_within n={n} d={d} centers={n_centers}",
        "numpy": lambda: K.count_within_np(pts, ctr, 0.5),
        "numba": (lambda: K.count_within_nb(pts, ctr, 0.5))
        if K.NUMBA_AVAILABLE else None,
    }


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--quick", action="store_true",
                    help="small sizes, single repeat")
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--output", help="also write results as JSON")
    args = ap.parse_args()
    repeats = 1 if args.quick else args.repeats
    scale = 1 if args.quick else 8
    rng = np.random.default_rng(12345)

    cases = [
        bench_prg(2000 * scale, 50, 200, rng),
        bench_logits(4096 * scale, 200, 200, 3, rng),
        bench_train(5 * scale, 200, 200, 3, rng),
        bench_count(2000 * scale, 30, 50, rng),
    ]

    # trigger JIT outside the timed region
    if K.NUMBA_AVAILABLE:
        for case in cases:
            case["numba"]()

    rows = []
    for case in cases:
        t_np = _time(case["numpy"], repeats)
        t_nb = _time(case["numba"], repeats) if case["numba"] else None
        rows.append({"case": case["name"], "numpy_s": t_np, "numba_s": t_nb,
                     "speedup": (t_np / t_nb) if t_nb else None})

    width = max(len(r["case"]) for r in rows)
    print(f"{'case':<{width}}  {'numpy':>10}  {'numba':>10}  {'speedup':>8}")
    for r in rows:
        nb = f"{r['numba_s']:.4f}s" if r["numba_s"] is not None else "n/a"
        sp = f"{r['speedup']:.2f}x" if r["speedup"] is not None else "n/a"
        print(f"{r['case']:<{width}}  {r['numpy_s']:>9.4f}s  {nb:>10}  {sp:>8}")
    print(f"\nactive path for library calls: {K.active_path()}")

    if args.output:
        with open(args.output, "w") as fh:
            json.dump({"repeats": repeats, "results": rows}, fh, indent=1)
        print(f"wrote {args.output}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
