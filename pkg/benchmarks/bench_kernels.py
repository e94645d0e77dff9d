#!/usr/bin/env python3
"""Benchmark the compiled scorer kernels against the numpy fallback.

Times the batched forward pass (aggregate + classify) and the fused
loss-plus-gradients step at the shipping dimensions and at the small
synthetic-task dimensions. Run from the repository root:

    python3 benchmarks/bench_kernels.py [--repeats 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from iquest.scorer import _kernels_np

try:
    from iquest.scorer import _kernels_cy
except ImportError:
    _kernels_cy = None

SIZES = [
    ("paper dims, batch 32", dict(n=32, d_in=768, d_gnn=128, d_mlp=128)),
    ("paper dims, batch 256", dict(n=256, d_in=768, d_gnn=128, d_mlp=128)),
    ("small dims, batch 32", dict(n=32, d_in=16, d_gnn=32, d_mlp=32)),
    ("small dims, batch 1", dict(n=1, d_in=16, d_gnn=32, d_mlp=32)),
]


def make_case(n, d_in, d_gnn, d_mlp, seed=0):
    rng = np.random.default_rng(seed)
    return dict(
        W=rng.normal(size=(d_gnn, 2 * d_in)),
        W1=rng.normal(size=(d_mlp, d_gnn + d_in)),
        b1=rng.normal(size=d_mlp),
        W2=rng.normal(size=(2, d_mlp)),
        b2=rng.normal(size=2),
        CM=rng.normal(size=(n, 2 * d_in)),
        Q=rng.normal(size=(n, d_in)),
        labels=rng.integers(0, 2, size=n).astype(np.int64),
    )


def time_call(fn, repeats):
    fn()  # warmup
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backend(mod, case, repeats):
    def forward():
        H_hat = mod.aggregate_batch(case["W"], case["CM"])
        H = np.ascontiguousarray(np.hstack([H_hat, case["Q"]]))
        mod.mlp_batch(case["W1"], case["b1"], case["W2"], case["b2"], H)

    def loss_grads():
        mod.loss_and_grads(case["W"], case["W1"], case["b1"], case["W2"], case["b2"],
                           case["CM"], case["Q"], case["labels"])

    return time_call(forward, repeats), time_call(loss_grads, repeats)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    backends = [("numpy", _kernels_np)]
    if _kernels_cy is not None:
        backends.append(("cython", _kernels_cy))
    else:
        print("compiled kernels not built; benchmarking numpy only\n")

    header = f"{'case':<24} {'op':<12}" + "".join(f" {name:>12}" for name, _ in backends)
    if len(backends) == 2:
        header += f" {'cy/np':>8}"
    print(header)
    print("-" * len(header))
    for label, dims in SIZES:
        case = make_case(**dims)
        rows = {"forward": [], "loss+grads": []}
        for _, mod in backends:
            fwd, lg = bench_backend(mod, case, args.repeats)
            rows["forward"].append(fwd)
            rows["loss+grads"].append(lg)
        for op, times in rows.items():
            line = f"{label:<24} {op:<12}" + "".join(f" {t * 1e6:>10.1f}us" for t in times)
            if len(times) == 2:
                line += f" {times[1] / times[0]:>7.2f}x"
            print(line)
    print("\n(best of --repeats runs; cy/np < 1 means the compiled kernel is faster)")


if __name__ == "__main__":
    main()
