"""Time the numba kernels against the pure-numpy ones and check they agree.

    python benchmarks/bench_backends.py [--repeat 3]
"""
import argparse
import time

import numpy as np

from concbound import kernels
from concbound.maxent import solve_maxent
from concbound.model import gen_simplex, gen_transportation
from concbound.oracles import conc_quadrature, count_exact, estimate_count_mc


def cases():
    s_big = gen_simplex(10000, 100)
    s_small = gen_simplex(4, 2)
    s_mid = gen_simplex(50, 30)
    t3 = gen_transportation([20, 25, 18], [21, 22, 20])
    t2 = gen_transportation([3, 4], [4, 3])
    sol_small = solve_maxent(s_small)
    sol_mid = solve_maxent(s_mid)
    sol_t2 = solve_maxent(t2)
    return [
        ("dp simplex(10000,100)", lambda be: count_exact(s_big, backend=be).count),
        ("dp transport 3x3", lambda be: count_exact(t3, backend=be).count),
        ("mc simplex(4,2) 1e6", lambda be: estimate_count_mc(sol_small, s_small, 10**6, 1, backend=be).hits),
        ("quadrature m=1 K=4096", lambda be: conc_quadrature(sol_mid, s_mid, 4096, backend=be)),
        ("quadrature m=3 K=64", lambda be: conc_quadrature(sol_t2, t2, 64, backend=be)),
    ]


def timed(fn, be, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(be)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    kernels.get_backend("numba")
    print(f"{'case':<28}{'numpy s':>10}{'numba s':>10}{'speedup':>9}  agree")
    for name, fn in cases():
        fn("numba")  # compile outside the timing
        t_np, r_np = timed(fn, "numpy", args.repeat)
        t_nb, r_nb = timed(fn, "numba", args.repeat)
        agree = r_np == r_nb if isinstance(r_np, int) else bool(np.isclose(r_np, r_nb, rtol=1e-12))
        print(f"{name:<28}{t_np:>10.3f}{t_nb:>10.3f}{t_np / t_nb:>9.1f}  {agree}")


if __name__ == "__main__":
    main()
