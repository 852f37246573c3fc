"""Compiled vs numpy kernels, and where an end-to-end run spends its time.

    python3 benchmarks/bench_kernels.py [--L 14] [--repeat 5]

Prints best-of-``repeat`` wall times per kernel and backend, then a breakdown
of one L-site pipeline stage (sector build, diagonalization, RK4 Krylov
integration) so the kernel speedups can be weighed against the eigensolver.
"""

import argparse
import time

import numpy as np

from qmpemba import kernels
from qmpemba.basis import Geometry, embed_table, enumerate_sector
from qmpemba.model import ModelParams, sector_hamiltonians
from qmpemba.spectra import diagonalize_all


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def kernel_cases(L):
    g = Geometry(L, (L // 2 - 1, L // 2 + 1))
    half = enumerate_sector(L, L // 2).states
    pos = np.arange(1, L + 1, dtype=np.float64)
    qos = np.arange(1 << g.L_s, dtype=np.int64)
    bath = np.arange(1 << g.L_b, dtype=np.int64)
    rng = np.random.default_rng(0)
    D = 200
    diag = 1j * rng.normal(size=D)
    sub = np.abs(rng.normal(size=D - 1)) + 0.5
    psi0 = np.zeros(D, dtype=np.complex128)
    psi0[0] = 1
    ts = np.linspace(0, 5, 101)
    return {
        f"sector_states(L={L}, n_up={L // 2})": lambda m: m.sector_states(L, L // 2),
        f"hopping_elements(dim={len(half)})": lambda m: m.hopping_elements(half, pos, 1.0),
        f"embed_table(2^{g.L_s} x 2^{g.L_b})": lambda m: m.embed_table(qos, g.qos_bits, bath, g.bath_bits),
        f"rk4_tridiagonal(D={D}, t<=5)": lambda m: m.rk4_tridiagonal(diag, sub, psi0, ts, 0.002),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--L", type=int, default=14)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    mods = kernels.backends()
    print(f"active backend: {kernels.BACKEND}; available: {', '.join(mods)}")
    print(f"{'kernel':40s} " + " ".join(f"{name:>12s}" for name in mods) + "   speedup")
    for label, fn in kernel_cases(args.L).items():
        t = {name: best_of(lambda: fn(m), args.repeat) for name, m in mods.items()}
        speed = t["python"] / t["cython"] if "cython" in t else float("nan")
        print(f"{label:40s} " + " ".join(f"{t[n] * 1e3:10.2f}ms" for n in mods) + f"   {speed:6.1f}x")

    p = ModelParams(args.L)
    t0 = time.perf_counter()
    blocks = sector_hamiltonians(p)
    t1 = time.perf_counter()
    diagonalize_all(blocks)
    t2 = time.perf_counter()
    print(f"\npipeline at L={args.L} (active backend):")
    print(f"  build all sector blocks  {t1 - t0:8.3f}s")
    print(f"  diagonalize all sectors  {t2 - t1:8.3f}s")
    print(f"  table for the QOS cut    {best_of(lambda: embed_table(Geometry(args.L, (2, 4))), 1):8.3f}s")


if __name__ == "__main__":
    main()
