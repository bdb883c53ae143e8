"""Time the compiled kernels against the numpy fallback.

Run ``python3 benchmarks/bench_kernels.py``. Both backends receive the
same inputs, and their outputs are compared before any timing is reported.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from scldpcl import _fallback
from scldpcl.density_evolution import StrandGraph
from scldpcl.protograph import build_scldpcl
from scldpcl.simulator import lift

try:
    from scldpcl import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _best(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_de(mod, sg: StrandGraph, eps: float, iters: int):
    def run():
        x = np.ones(sg.num_strands)
        u = np.ones(sg.num_strands)
        p = np.empty(sg.num_vns)
        out = mod.de_iterate(sg.vn_ptr, sg.vn_edges, sg.cn_ptr, sg.cn_edges,
                             np.full(sg.num_vns, eps), np.ones(sg.num_cns), x, u, p,
                             iters, -1.0, -1.0)
        return out, p
    return run


def bench_peel(mod, T, erased: np.ndarray, lifo: bool):
    def run():
        known = (~erased).astype(np.uint8)
        n = mod.peel(T.vn_ptr, T.vn_adj, T.cn_ptr, T.cn_adj, known,
                     np.ones(T.num_vns, np.uint8), lifo)
        return n, known
    return run


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--L", type=int, default=625)
    ap.add_argument("--iters", type=int, default=500)
    args = ap.parse_args()

    G = build_scldpcl(4, 16, 1, 12)
    sg = StrandGraph.from_adjacency(G.adjacency)
    T = lift(build_scldpcl(4, 8, 1, 6), args.L, seed=1)
    erased = np.random.default_rng(0).random(T.num_vns) < 0.42

    backends = {"python": _fallback}
    if _ckernels is not None:
        backends["cython"] = _ckernels

    cases = {
        f"de_iterate (4,16,1,M=12), {args.iters} iters": lambda m: bench_de(m, sg, 0.2, args.iters),
        f"peel (4,8,1,M=6), L={args.L}": lambda m: bench_peel(m, T, erased, False),
    }
    print(f"{'case':<44}{'backend':<9}{'best [ms]':>11}{'speedup':>9}")
    for name, make in cases.items():
        outputs = {b: make(m)() for b, m in backends.items()}
        if "cython" in outputs:
            (_, pa), (_, pb) = outputs["python"], outputs["cython"]
            if not np.allclose(pa, pb, rtol=0, atol=1e-12):
                raise SystemExit(f"backends disagree on {name}")
        times = {b: _best(make(m), args.repeat) for b, m in backends.items()}
        for b, t in times.items():
            print(f"{name:<44}{b:<9}{1e3 * t:>11.2f}{times['python'] / t:>8.1f}x")


if __name__ == "__main__":
    main()
