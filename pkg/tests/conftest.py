"""Shared test helpers: random inputs and brute-force oracles."""

from __future__ import annotations

import math

import numpy as np

from mdconst import constellation as cn
from mdconst import socp


def random_constellation(rng: np.random.Generator, K: int, M: int) -> cn.Constellation:
    pts = rng.standard_normal((K, M)) + 1j * rng.standard_normal((K, M))
    return cn.Constellation(points=pts)


def random_tiny_spec(rng: np.random.Generator) -> socp.SubproblemSpec:
    """Random bounded instance with n <= 4 and <= 5 rows.

    Construction guarantees a strictly interior start and a bounded
    optimum: row gradients are capped at norm 1.5 and lam <= 0.5, so the
    eta reward can never outrun the cone objective t >= ||z||.
    """
    n = int(rng.integers(1, 5))
    n_med = int(rng.integers(0, 3))
    n_ew = int(rng.integers(1, 6 - n_med))  # at least one row bounds eta
    lam = float(rng.uniform(0.05, 0.5))
    x0 = rng.standard_normal(n)

    def rand_row():
        g = rng.standard_normal(n)
        norm = np.linalg.norm(g)
        g *= rng.uniform(0.3, 1.5) / norm
        return g

    med_rows = []
    for _ in range(n_med):
        g = rand_row()
        h = float(g @ x0 - rng.uniform(0.1, 2.0))  # strict slack at x0
        med_rows.append((g, h))
    ew_rows = []
    eta0_cap = np.inf
    for _ in range(n_ew):
        g = rand_row()
        h = float(g @ x0 - rng.uniform(0.1, 2.0))
        ew_rows.append((g, h))
        eta0_cap = min(eta0_cap, float(g @ x0 - h))
    t0 = float(np.linalg.norm(x0) * 1.1 + 0.1)
    eta0 = eta0_cap - 0.05
    return socp.SubproblemSpec(
        n=n, lam=lam, med_rows=med_rows, ew_rows=ew_rows,
        strict_start=(x0, t0, eta0),
    )


def oracle_objective(spec: socp.SubproblemSpec, iters: int = 4000) -> float:
    """Independent minimum of t - lam*eta via bisection / ellipsoid method.

    For fixed z the optimal t is ||z|| and the optimal eta is the smallest
    element-wise row slack, so the problem reduces to n <= 4 dimensions:
        f(z) = ||z|| - lam * min_i (g_i^T z - h_i)   over med-feasible z.
    f is convex; n = 1 is solved by subgradient-sign bisection, n >= 2 by
    the ellipsoid method with feasibility cuts. Instances generated by
    random_tiny_spec are coercive (lam * ||g|| <= 0.75 < 1), which bounds
    the minimizer inside the initial ball.
    """
    n = spec.n
    lam = spec.lam
    Gm = np.array([g for g, _ in spec.med_rows]).reshape(-1, n)
    hm = np.array([h for _, h in spec.med_rows])
    Ge = np.array([g for g, _ in spec.ew_rows]).reshape(-1, n)
    he = np.array([h for _, h in spec.ew_rows])

    def fval(x):
        if Gm.size and (Gm @ x - hm).min() < -1e-15:
            return np.inf
        return float(np.linalg.norm(x) - lam * np.min(Ge @ x - he))

    def subgrad(x):
        if Gm.size:
            viol = Gm @ x - hm
            if viol.min() < 0:  # feasibility cut on the most violated row
                return -Gm[int(np.argmin(viol))], True
        imin = int(np.argmin(Ge @ x - he))
        nz = np.linalg.norm(x)
        return (x / nz if nz > 1e-14 else np.zeros(n)) - lam * Ge[imin], False

    x0 = np.asarray(spec.strict_start[0], dtype=np.float64)
    f0 = fval(x0)
    radius = (
        4.0 * (abs(f0) + lam * float(np.abs(he).max()))
        + float(np.linalg.norm(x0))
        + 2.0
    )
    best = f0

    if n == 1:
        lo, hi = x0[0] - radius, x0[0] + radius
        for _ in range(200):
            x = np.array([0.5 * (lo + hi)])
            best = min(best, fval(x))
            g, _ = subgrad(x)
            if g[0] > 0:
                hi = x[0]
            elif g[0] < 0:
                lo = x[0]
            else:
                break
        return best

    x = x0.copy()
    P = np.eye(n) * radius**2
    for _ in range(iters):
        g, infeasible = subgrad(x)
        if not infeasible:
            best = min(best, fval(x))
        Pg = P @ g
        denom = float(g @ Pg)
        if denom <= 0:
            break
        gtil = Pg / math.sqrt(denom)
        x = x - gtil / (n + 1)
        P = (n * n / (n * n - 1.0)) * (P - (2.0 / (n + 1)) * np.outer(gtil, gtil))
    return best


# -- acceptance reporting ---------------------------------------------------

# test_acceptance.py appends one line per criterion; the terminal-summary
# hook replays them after the run, outside pytest's output capture.
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
