"""Convex-concave procedure for joint MED / element-wise distance design.

The non-convex program (minimize constellation energy, keep every pairwise
squared Euclidean distance above a threshold and every per-dimension
squared gap above an auxiliary level that is itself maximized) is solved
by repeatedly replacing each quadratic constraint with its affine tangent
at the current iterate and solving the resulting second-order cone
subproblem. Each iterate stays feasible for the original quadratic
constraints and the constellation energy is non-increasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import constellation as cn
from . import qforms, socp


@dataclass(frozen=True)
class CCCPConfig:
    K: int
    M: int
    lam: float = 0.5
    d_e_threshold: float = 1.0
    epsilon: float = 1e-4
    max_iters: int = 100
    restarts: int = 20
    seed: int = 0
    solver_tol: float = 1e-8
    init_margin: float = 1.05
    solver_max_newton: int = 800

    def __post_init__(self):
        if self.K < 1 or self.M < 2:
            raise ValueError("need K >= 1 and M >= 2")
        if self.lam <= 0 or self.d_e_threshold <= 0 or self.epsilon <= 0:
            raise ValueError("lam, d_e_threshold and epsilon must be > 0")
        if self.max_iters < 1 or self.restarts < 1:
            raise ValueError("max_iters and restarts must be >= 1")


@dataclass
class ChainResult:
    """Outcome of one CCCP restart chain."""

    chain_index: int
    status: str  # "converged" | "max_iter" | "failed"
    iterations: int
    c_final: np.ndarray | None
    trace: list  # per-iteration dicts
    final_energy: float
    med: float  # after unit-power normalization
    mpd: float
    max_kkt: float
    failure: str = ""


@dataclass
class OptimizeResult:
    best: cn.Constellation
    best_raw: cn.Constellation
    profile: cn.DistanceProfile
    trace: list
    all_restarts: list = field(default_factory=list)


def _pair_forms(K: int, M: int):
    med_idx = [qforms.euclidean_pair(i, j, K, M) for i, j in cn.pair_indices(M)]
    ew_idx = [
        qforms.elementwise(i, j, k, K, M)
        for i, j in cn.pair_indices(M)
        for k in range(K)
    ]
    return med_idx, ew_idx


def init_feasible(
    K: int,
    M: int,
    d_e: float,
    rng: np.random.Generator,
    init_margin: float = 1.05,
    resample_cap: int = 100,
) -> np.ndarray:
    """Random complex Gaussian start rescaled to MED = init_margin * d_e.

    Resamples (bounded) if any element-wise gap collapses below 1e-9
    after scaling, so the auxiliary level can start strictly positive.
    """
    for _ in range(resample_cap):
        c = (rng.standard_normal(K * M) + 1j * rng.standard_normal(K * M)) / math.sqrt(2)
        X = c.reshape(M, K).T  # column m is vector x_m
        C = cn.Constellation(points=X)
        dmin = cn.med(C)
        if dmin <= 0.0:
            continue
        scale = init_margin * d_e / dmin
        c_scaled = c * scale
        if cn.min_elementwise(cn.Constellation(points=X * scale)) > 1e-9:
            return c_scaled
    raise RuntimeError(f"init_feasible: resample cap ({resample_cap}) exceeded")


def c_to_constellation(c: np.ndarray, K: int, M: int) -> cn.Constellation:
    return cn.Constellation(points=np.asarray(c).reshape(M, K).T)


def linearize(
    z_q: np.ndarray, config: CCCPConfig, med_idx=None, ew_idx=None
) -> socp.SubproblemSpec:
    """Tangent subproblem at z_q; z_q itself is strictly interior for it."""
    K, M = config.K, config.M
    if med_idx is None or ew_idx is None:
        med_idx, ew_idx = _pair_forms(K, M)
    de2 = config.d_e_threshold**2

    med_vals = np.array([qforms.qf_value(idx, z_q) for idx in med_idx])
    ew_vals = np.array([qforms.qf_value(idx, z_q) for idx in ew_idx])
    if np.min(med_vals) <= de2 or np.min(ew_vals) <= 0.0:
        raise ValueError(
            "CCCP invariant violated: iterate lost strict feasibility "
            f"(min pair qf {np.min(med_vals):.6e}, min elem qf {np.min(ew_vals):.6e})"
        )

    med_rows = [
        (qforms.qf_gradient(idx, z_q), de2 + v) for idx, v in zip(med_idx, med_vals)
    ]
    ew_rows = [
        (qforms.qf_gradient(idx, z_q), float(v)) for idx, v in zip(ew_idx, ew_vals)
    ]
    t0 = float(np.linalg.norm(z_q)) * (1.0 + 1e-6)
    eta0 = float(np.min(ew_vals)) * (1.0 - 1e-6)
    return socp.SubproblemSpec(
        n=2 * K * M,
        lam=config.lam,
        med_rows=med_rows,
        ew_rows=ew_rows,
        strict_start=(z_q.copy(), t0, eta0),
    )


def run_chain(config: CCCPConfig, chain_index: int) -> ChainResult:
    """One restart: feasible init, iterate linearize/solve until the
    step norm drops below epsilon or the iteration cap is hit."""
    K, M = config.K, config.M
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, chain_index]))
    med_idx, ew_idx = _pair_forms(K, M)
    de2 = config.d_e_threshold**2

    try:
        c0 = init_feasible(K, M, config.d_e_threshold, rng, config.init_margin)
    except RuntimeError as exc:
        return ChainResult(chain_index, "failed", 0, None, [], math.nan,
                           math.nan, math.nan, math.nan, failure=str(exc))

    z = qforms.realify(c0)
    trace = []
    status = "max_iter"
    iters = 0
    max_kkt = 0.0
    eta_prev = float(min(qforms.qf_value(idx, z) for idx in ew_idx))

    for q in range(1, config.max_iters + 1):
        try:
            spec = linearize(z, config, med_idx, ew_idx)
            sol = socp.solve(
                spec, tol=config.solver_tol, max_newton=config.solver_max_newton
            )
        except (ValueError, socp.NotStrictlyFeasible) as exc:
            return ChainResult(chain_index, "failed", q - 1, None, trace,
                               math.nan, math.nan, math.nan, max_kkt,
                               failure=str(exc))
        if sol.status == "numerical_failure":
            return ChainResult(chain_index, "failed", q - 1, None, trace,
                               math.nan, math.nan, math.nan, max_kkt,
                               failure="subproblem numerical_failure")
        z_new = sol.z
        step = float(np.linalg.norm(z_new - z))
        med_slack = min(qforms.qf_value(idx, z_new) for idx in med_idx) - de2
        ew_min = min(qforms.qf_value(idx, z_new) for idx in ew_idx)
        trace.append(
            {
                "q": q,
                "energy": float(z_new @ z_new),
                "objective": sol.objective,
                "eta": sol.eta,
                "step_norm": step,
                "min_med_slack": float(med_slack),
                "min_ew_margin": float(ew_min - sol.eta),
                "kkt_residual": sol.kkt_residual,
                "newton_iters": sol.newton_iters,
            }
        )
        max_kkt = max(max_kkt, sol.kkt_residual)
        z = z_new
        eta_prev = sol.eta
        iters = q
        if step <= config.epsilon:
            status = "converged"
            break

    c_final = qforms.unrealify(z)
    raw = c_to_constellation(c_final, K, M)
    norm = cn.normalize(raw)
    return ChainResult(
        chain_index=chain_index,
        status=status,
        iterations=iters,
        c_final=c_final,
        trace=trace,
        final_energy=float(z @ z),
        med=cn.med(norm),
        mpd=cn.mpd(norm),
        max_kkt=max_kkt,
    )


def select_best(chains: list[ChainResult]) -> ChainResult:
    """Lexicographic pick: MED rounded to 3 decimals first, then MPD."""
    ok = [ch for ch in chains if ch.status != "failed"]
    if not ok:
        raise RuntimeError(
            "all CCCP restarts failed: "
            + "; ".join(f"chain {ch.chain_index}: {ch.failure}" for ch in chains)
        )
    return max(ok, key=lambda ch: (round(ch.med, 3), ch.mpd))


def optimize(config: CCCPConfig) -> OptimizeResult:
    chains = [run_chain(config, idx) for idx in range(config.restarts)]
    best_chain = select_best(chains)
    raw = c_to_constellation(best_chain.c_final, config.K, config.M)
    meta = {
        "lambda": config.lam,
        "d_e_threshold": config.d_e_threshold,
        "epsilon": config.epsilon,
        "max_iters": config.max_iters,
        "seed": config.seed,
        "chain_index": best_chain.chain_index,
        "iterations_used": best_chain.iterations,
        "final_energy": best_chain.final_energy,
        "med": best_chain.med,
        "mpd": best_chain.mpd,
    }
    best = cn.Constellation(points=cn.normalize(raw).points, meta=meta)
    summaries = [
        {
            "chain_index": ch.chain_index,
            "status": ch.status,
            "iterations": ch.iterations,
            "final_energy": ch.final_energy,
            "med": ch.med,
            "mpd": ch.mpd,
            "max_kkt": ch.max_kkt,
            "failure": ch.failure,
        }
        for ch in chains
    ]
    return OptimizeResult(
        best=best,
        best_raw=raw,
        profile=cn.distance_profile(best),
        trace=best_chain.trace,
        all_restarts=summaries,
    )


def lambda_sweep(config: CCCPConfig, lambdas: list[float]) -> list[tuple[float, OptimizeResult]]:
    """Re-run the full optimization for each trade-off value."""
    out = []
    for lam in lambdas:
        cfg = CCCPConfig(
            K=config.K, M=config.M, lam=lam,
            d_e_threshold=config.d_e_threshold, epsilon=config.epsilon,
            max_iters=config.max_iters, restarts=config.restarts,
            seed=config.seed, solver_tol=config.solver_tol,
            init_margin=config.init_margin,
        )
        out.append((lam, optimize(cfg)))
    return out


def amgm_gap_report(result: OptimizeResult) -> dict:
    """How close the element-wise relaxation is to tightness for the result."""
    C = result.best
    checks = cn.amgm_check(C)
    delta = cn.min_elementwise(C)
    d_p = cn.mpd(C)
    return {
        "pairs": checks,
        "min_slack": min(ch["slack"] for ch in checks),
        "equality_pairs": [ch["pair"] for ch in checks if ch["equality"]],
        "min_elementwise": delta,
        "mpd": d_p,
        "delta_pow_K_bound": delta**C.K,
        "bound_holds": d_p >= delta**C.K * (1.0 - 1e-9),
    }
