"""Experiment drivers shared by the command line and the test suites."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from ..fourier_scale import NormSpec, ScaleFunction, norm
from ..galerkin_iteration import ConvergenceReport, IterationParams, run
from ..param_solver import FeasibleParams, default_eta, solve_params
from ..problems import NlsResidualProblem, SmallDivisorProblem
from ..problems.base import ModelProblem
from ..surjection_solver import SolveReport, newton_baseline
from .config import ExperimentConfig

__all__ = [
    "WORKERS_ENV",
    "worker_count",
    "make_problem",
    "solve_config_params",
    "iteration_params",
    "p1_profile",
    "scaled_target",
    "galerkin_run",
    "newton_run",
    "bisect_threshold",
    "ThresholdPoint",
    "ThresholdFit",
    "fit_exponent",
    "threshold_sweep",
]

WORKERS_ENV = "TAMEGALERKIN_WORKERS"


def worker_count() -> int:
    """Worker processes for sweeps, from the environment (default 1)."""
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def make_problem(cfg: ExperimentConfig) -> ModelProblem:
    if cfg.problem == "p1":
        return SmallDivisorProblem(**cfg.problem_kwargs)
    return NlsResidualProblem(**cfg.problem_kwargs)


def solve_config_params(cfg: ExperimentConfig) -> FeasibleParams:
    """Parameters for the configured signature and targets; the eta default is
    the canonical midpoint of its admissible range."""
    eta = cfg.eta if cfg.eta is not None else default_eta(cfg.signature, cfg.targets, cfg.variant)
    return solve_params(cfg.signature, cfg.targets, float(eta), cfg.variant)


def iteration_params(cfg: ExperimentConfig, params: FeasibleParams | None = None) -> IterationParams:
    params = params or solve_config_params(cfg)
    r = None if cfg.r is None else float(cfg.r)
    return IterationParams.from_targets(params, cfg.targets, K=cfg.K, tol_final=cfg.tol_final,
                                        relative_tol=cfg.relative_tol, n_max=cfg.n_max, r=r, seed=cfg.seed)


def p1_profile(problem: SmallDivisorProblem, delta: float, modes: int = 2, decay: float = 0.25,
               seed: int = 0) -> ScaleFunction:
    """Smooth target shape: modes ``|k| <= modes`` with amplitude ``decay^|k|``
    and seeded random phases, normalized to unit ``delta`` norm."""
    rng = np.random.default_rng(seed)
    N = problem.grid.N
    c = np.zeros(problem.grid.width, dtype=complex)
    for k in range(-modes, modes + 1):
        c[k + N] = decay ** abs(k) * np.exp(2j * np.pi * rng.random())
    u = ScaleFunction(problem.grid, c[None, :])
    return u * (1.0 / norm(u, NormSpec("plain", delta)))


def scaled_target(profile: ScaleFunction, amplitude: float) -> ScaleFunction:
    return profile * amplitude


def galerkin_run(problem: ModelProblem, v: ScaleFunction, ip: IterationParams, eps: float,
                 enforce_regime: bool = False) -> ConvergenceReport:
    return run(problem, v, ip, eps, enforce_regime=enforce_regime)


def newton_run(problem: ModelProblem, v: ScaleFunction, ip: IterationParams, eps: float,
               radius: float = 1.0, budget: int = 50) -> tuple[SolveReport, float]:
    """Newton baseline with the problem's approximate right inverse.

    Success needs the ``s0`` residual below the same tolerance the Galerkin
    scheme uses and the iterate to stay in the ``s1`` ball of ``radius``.
    Returns the report and the final ``||u||_{s1}``.
    """
    sig = problem.signature
    s0n = lambda x: norm(problem.from_flat(x), NormSpec("plain", sig.s0))  # noqa: E731
    s1n = lambda x: norm(problem.from_flat(x), NormSpec("plain", ip.s1))  # noqa: E731
    vf = problem.to_flat(v)
    tol = ip.tol_final * (s0n(vf) if ip.relative_tol else 1.0)

    def F(x):
        return problem.to_flat(problem.evaluate(problem.from_flat(x), eps))

    def L_at(x):
        L = problem.right_inverse(problem.from_flat(x), eps)
        return lambda r: problem.to_flat(L(problem.from_flat(r)))

    rep = newton_baseline(F, L_at, vf, eps, radius, s1n, tol=tol, budget=budget, norm_out=s0n)
    return rep, s1n(rep.solution)


def bisect_threshold(ok: Callable[[float], bool], lo: float, hi_cap: float, steps: int = 12):
    """Largest converging amplitude.

    Doubles from ``lo`` until the first failure, then runs ``steps``
    bisection steps on the last bracket, so the bracket width ends at
    ``2^{-steps}`` of its lower end.  Returns ``(c_star, c_fail, status)``
    with status ``ok``, ``unusable`` (fails already at ``lo``) or ``capped``
    (never failed below ``hi_cap``).
    """
    if not ok(lo):
        return float("nan"), lo, "unusable"
    a = lo
    while True:
        b = 2.0 * a
        if b > hi_cap:
            return a, float("nan"), "capped"
        if not ok(b):
            break
        a = b
    for _ in range(steps):
        mid = 0.5 * (a + b)
        if ok(mid):
            a = mid
        else:
            b = mid
    return a, b, "ok"


@dataclass(frozen=True)
class ThresholdPoint:
    scheme: str
    eps: float
    c_star: float
    c_fail: float
    status: str
    below_ok: bool
    above_fails: bool

    @property
    def usable(self) -> bool:
        return self.status == "ok"

    @property
    def bracket_verified(self) -> bool:
        return self.below_ok and self.above_fails


@dataclass(frozen=True)
class ThresholdFit:
    scheme: str
    exponent: float
    ci_low: float
    ci_high: float
    points: int


def fit_exponent(eps: np.ndarray, c: np.ndarray, scheme: str = "", level: float = 0.95) -> ThresholdFit:
    """Weighted least squares of ``log c`` on ``log eps``; the two smallest
    ``eps`` count double.  The interval is the Student-t interval of the
    slope (nan with fewer than three points)."""
    eps = np.asarray(eps, float)
    c = np.asarray(c, float)
    n = len(eps)
    if n < 2:
        return ThresholdFit(scheme, float("nan"), float("nan"), float("nan"), n)
    w = np.ones(n)
    w[np.argsort(eps)[:2]] = 2.0
    X = np.vstack([np.log(eps), np.ones(n)]).T
    y = np.log(c)
    XtW = X.T * w
    cov_unscaled = np.linalg.inv(XtW @ X)
    coef = cov_unscaled @ (XtW @ y)
    slope = float(coef[0])
    if n < 3:
        return ThresholdFit(scheme, slope, float("nan"), float("nan"), n)
    resid = y - X @ coef
    s2 = float(np.sum(w * resid**2)) / (n - 2)
    se = math.sqrt(s2 * cov_unscaled[0, 0])
    half = float(stats.t.ppf(0.5 + level / 2, n - 2)) * se
    return ThresholdFit(scheme, slope, slope - half, slope + half, n)


def _ok_function(cfg: ExperimentConfig, scheme: str, eps: float) -> Callable[[float], bool]:
    problem = make_problem(cfg)
    ip = iteration_params(cfg)
    profile = p1_profile(problem, ip.delta, cfg.profile_modes, cfg.profile_decay, cfg.seed)
    if scheme == "galerkin":
        def ok(c):
            return galerkin_run(problem, profile * c, ip, eps).converged
    else:
        def ok(c):
            rep, _ = newton_run(problem, profile * c, ip, eps, cfg.newton_radius, cfg.newton_budget)
            return rep.success
    return ok


def _threshold_task(args) -> ThresholdPoint:
    cfg, scheme, eps = args
    ok = _ok_function(cfg, scheme, eps)
    c, c_fail, status = bisect_threshold(ok, cfg.bracket_lo, cfg.bracket_hi, cfg.bisection_steps)
    below = above = False
    if status == "ok":
        tol = 2.0 ** -cfg.bisection_steps
        below = ok(c * (1.0 - tol))
        above = not ok(c * (1.0 + tol))
    return ThresholdPoint(scheme, eps, c, c_fail, status, below, above)


def threshold_sweep(cfg: ExperimentConfig, workers: int | None = None
                    ) -> tuple[list[ThresholdPoint], dict[str, ThresholdFit]]:
    """Critical amplitude per scheme and eps, and the fitted exponents.

    Points where every run fails are marked unusable and left out of the fit.
    """
    if cfg.problem != "p1":
        raise ValueError("threshold sweeps are defined for the p1 problem")
    tasks = [(cfg, s, e) for s in cfg.schemes for e in cfg.eps_grid]
    workers = worker_count() if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_threshold_task, tasks))
    else:
        points = [_threshold_task(t) for t in tasks]
    points.sort(key=lambda p: (p.scheme, -p.eps))
    fits = {}
    for s in cfg.schemes:
        use = [p for p in points if p.scheme == s and p.usable]
        fits[s] = fit_exponent(np.array([p.eps for p in use]), np.array([p.c_star for p in use]), s)
    return points, fits
