"""Compiled vs pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--K 100000] [--repeat 3]

Times the sensor scan (exact 128-bit fixed point) and the batched sup of
Dirichlet polynomials used by the restriction constant, checks that both
backends agree, and prints one line per kernel.
"""

import argparse
import time

import numpy as np

from dirichlet_heat import kernels
from dirichlet_heat.sensor import fixed_point_ratio, propose_point


def best_time(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--K", type=int, default=100_000)
    p.add_argument("--draws", type=int, default=1000)
    p.add_argument("--points", type=int, default=2000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    if kernels._compiled is None:
        print("compiled extension not importable; only the fallback is timed")
    r = fixed_point_ratio(propose_point("golden").ratio, 128)
    rows = []
    tp, vp = best_time(lambda: kernels.sensor_scan(r, 128, args.K, "python"), args.repeat)
    if kernels._compiled is not None:
        tc, vc = best_time(lambda: kernels.sensor_scan(r, 128, args.K, "compiled"), args.repeat)
        assert vc == vp, (vc, vp)
        rows.append(("sensor_scan", args.K, tp, tc))
    else:
        rows.append(("sensor_scan", args.K, tp, float("nan")))

    rng = np.random.default_rng(0)
    c = rng.uniform(-1, 1, (args.draws, 4))
    lam = np.arange(1, 5, dtype=float) ** 2
    t = np.linspace(0.5, 1.0, args.points)
    tp, vp = best_time(lambda: kernels.dirichlet_sup_many(c, lam, t, "python"), args.repeat)
    if kernels._compiled is not None:
        tc, vc = best_time(lambda: kernels.dirichlet_sup_many(c, lam, t, "compiled"), args.repeat)
        assert np.allclose(vc, vp, rtol=1e-12, atol=0)
    else:
        tc = float("nan")
    rows.append(("dirichlet_sup_many", args.draws * args.points, tp, tc))

    print(f"{'kernel':<20}{'size':>12}{'python [s]':>14}{'compiled [s]':>14}{'speedup':>10}")
    for name, size, tp, tc in rows:
        print(f"{name:<20}{size:>12}{tp:>14.4f}{tc:>14.4f}{tp / tc:>10.1f}")


if __name__ == "__main__":
    main()
