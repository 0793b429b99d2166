"""Compare the compiled kernels with the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--n 64] [--repeat 3]
"""
import argparse
import time

import numpy as np

from sfwg import _fallback
from sfwg._backend import COMPILED, kernels
from sfwg.assembly import assemble_load, assemble_stiffness
from sfwg.mesh import build_uniform_quad_mesh, build_uniform_triangle_mesh


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=64, help="triangle mesh size for matvec and pcg")
    ap.add_argument("--probe-n", type=int, default=8, help="quad mesh size for the LDLT probe")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not COMPILED:
        raise SystemExit("compiled kernels unavailable; build the package first")

    mesh = build_uniform_triangle_mesh(args.n)
    A = assemble_stiffness(mesh, 1, 2).csr
    b = assemble_load(mesh, 1, "sinsin")
    ip, ix, data = A.indptr.astype(np.int64), A.indices.astype(np.int32), A.data
    x = np.random.default_rng(0).standard_normal(A.shape[0])

    dense = assemble_stiffness(build_uniform_quad_mesh(args.probe_n), 1, 2).toarray()
    dense = np.ascontiguousarray(dense)

    cases = {
        f"csr_matvec x100 (n={A.shape[0]})":
            lambda k: lambda: [k.csr_matvec(ip, ix, data, x) for _ in range(100)],
        f"pcg (n={A.shape[0]})":
            lambda k: lambda: k.pcg(ip, ix, data, b, np.zeros_like(b), 1e-10, 10 * A.shape[0]),
        f"ldlt_pivoted (n={dense.shape[0]})":
            lambda k: lambda: k.ldlt_pivoted(dense.copy(), 1e-10),
    }
    print(f"{'kernel':<28}{'compiled s':>12}{'fallback s':>12}{'speedup':>10}")
    for name, make in cases.items():
        tc = best_of(make(kernels), args.repeat)
        tf = best_of(make(_fallback), args.repeat)
        print(f"{name:<28}{tc:>12.4f}{tf:>12.4f}{tf / tc:>10.1f}")


if __name__ == "__main__":
    main()
