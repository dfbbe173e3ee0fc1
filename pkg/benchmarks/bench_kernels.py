"""Timing comparison of the numba and pure-numpy detection kernels.

Run with:  python3 benchmarks/bench_kernels.py

The backend used by the package is chosen by the MDCONST_BACKEND env var;
this script bypasses that and calls both implementations directly so they
can be compared in one process.
"""

from __future__ import annotations

import time

import numpy as np

from mdconst import constellation as cn
from mdconst import kernels, scma


def _time(fn, *args, repeats=3):
    fn(*args)  # warm-up (covers jit compilation)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_ml(batch: int = 200_000) -> None:
    rng = np.random.default_rng(7)
    C = cn.cartesian_qpsk(2)
    pts = C.points
    K, M = pts.shape
    tx = rng.integers(0, M, batch)
    h = (rng.standard_normal((batch, K)) + 1j * rng.standard_normal((batch, K))) / np.sqrt(2)
    y = h * pts[:, tx].T + 0.1 * (
        rng.standard_normal((batch, K)) + 1j * rng.standard_normal((batch, K))
    )
    t_np = _time(kernels._ml_detect_numpy, y, h, pts)
    print(f"ml_detect    batch={batch:>7}  numpy {t_np*1e3:8.1f} ms", end="")
    if kernels.HAVE_NUMBA:
        t_nb = _time(kernels._ml_detect_numba, y, h, pts)
        print(f"   numba {t_nb*1e3:8.1f} ms   speedup {t_np/t_nb:5.1f}x")
    else:
        print("   (numba unavailable)")


def bench_mpa(batch: int = 500, iters: int = 10) -> None:
    rng = np.random.default_rng(11)
    cbs = scma.build_codebooks(scma.default_indicator(), cn.cartesian_qpsk(2))
    J, N, M = cbs.J, cbs.N, cbs.M
    tx = rng.integers(0, M, (batch, J))
    H = (rng.standard_normal((batch, N, J)) + 1j * rng.standard_normal((batch, N, J))) / np.sqrt(2)
    sig = cbs.codebooks[np.arange(J), :, tx]  # (B, J, N)
    y = np.einsum("bnj,bjn->bn", H, sig)
    res_users, res_deg, user_res = scma._graph_arrays(cbs.indicator)
    args = (y, H, cbs.codebooks, res_users, res_deg, user_res, 0.05, iters)
    t_np = _time(kernels._mpa_detect_numpy, *args)
    print(f"mpa_detect   batch={batch:>7}  numpy {t_np*1e3:8.1f} ms", end="")
    if kernels.HAVE_NUMBA:
        args_nb = args[:6] + (float(args[6]), int(args[7]))
        t_nb = _time(kernels._mpa_detect_numba, *args_nb)
        print(f"   numba {t_nb*1e3:8.1f} ms   speedup {t_np/t_nb:5.1f}x")
    else:
        print("   (numba unavailable)")


if __name__ == "__main__":
    print(f"numba available: {kernels.HAVE_NUMBA} (selected backend: {kernels.BACKEND})")
    bench_ml()
    bench_mpa()
