"""Multi-level Galerkin iteration for ``F_eps(u) = v``.

Cutoffs grow doubly exponentially, ``Lambda_n = Lambda_1^{alpha^{n-1}}`` with
``Lambda_1 = K eps^{-eta}``, and ``M_n = Lambda_n^theta``.  Level ``n`` solves

    Pi'(M_n) F(u_n) = Pi'(M_{n-1}) v,      u_n in E(Lambda_n),

by writing ``u_n = u_{n-1} + z`` and applying the local surjection solver to

    f_n(z) = Pi'_n (F(u_{n-1} + z) - F(u_{n-1})) = Delta_n v + e_n,

inside a ball of the level norm.  Every step records the measured ratios
against the theoretical bounds so that the suppressed constants can be
checked for independence from ``n``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .fourier_scale import NormSpec, ScaleFunction, cutoff_mask, norm
from .param_solver import FeasibleParams, TameSignature, UserTargets
from .problems.base import ModelProblem
from .surjection_solver import (
    BlockOperator,
    ContractionError,
    NeumannInverse,
    PreconditionError,
    SolveReport,
    WeightedNorm,
    neumann_right_inverse,
    solve_local,
)

__all__ = [
    "IterationParams",
    "IterationState",
    "StepRecord",
    "ConvergenceReport",
    "ParameterError",
    "StepFailure",
    "init_lambdas",
    "lambda_n",
    "block_norm",
    "summability_majorant",
    "initialize",
    "step",
    "run",
    "adapt_K",
    "calibrate_r",
    "sufficient_condition_exponents",
]

VERDICTS = ("converged", "stalled", "contraction_failure", "budget", "rejected", "bound_violation")


class ParameterError(ValueError):
    """Cutoff ordering or parameter window violated."""


class StepFailure(RuntimeError):
    def __init__(self, verdict: str, message: str, record: "StepRecord | None" = None):
        super().__init__(message)
        self.verdict = verdict
        self.record = record


@dataclass(frozen=True)
class IterationParams:
    params: FeasibleParams
    s1: float
    delta: float
    g_p: float
    K: float = 2.0
    tol_final: float = 1e-8
    relative_tol: bool = False
    n_max: int = 10
    r: float | None = None
    q_max: float = 0.5
    term_tol: float = 1e-10
    inner_tol: float = 1e-12
    budget: int = 200
    enforce_preconditions: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.K < 2:
            raise ParameterError("K must be at least 2")

    @classmethod
    def from_targets(cls, params: FeasibleParams, tgt: UserTargets, **kw) -> "IterationParams":
        return cls(params=params, s1=tgt.s1, delta=tgt.delta, g_p=tgt.g_p, **kw)


@dataclass
class StepRecord:
    n: int
    Lambda: float
    M: float
    r: float
    dz_s0: float = 0.0
    dz_sigma: float = 0.0
    log_bound_s0: float = float("nan")
    log_bound_sigma: float = float("nan")
    delta_v: float = 0.0
    e_norm: float = 0.0
    delta_v_ratio: float = float("nan")
    e_ratio: float = float("nan")
    q: float = 0.0
    inner_iterations: int = 0
    inner_residual: float = 0.0
    M_est: float = float("nan")
    u_s1: float = 0.0
    residual: float = float("nan")
    telescoping: float = 0.0
    admission_margin: float = float("nan")
    saturated: bool = False
    success: bool = True
    note: str = ""

    @property
    def C_s0(self) -> float:
        """Measured constant of the low-norm increment bound."""
        return _ratio(self.dz_s0, self.log_bound_s0)

    @property
    def C_sigma(self) -> float:
        """Measured constant of the high-norm increment bound."""
        return _ratio(self.dz_sigma, self.log_bound_sigma)

    def row(self) -> dict:
        d = asdict(self)
        d["C_s0"] = self.C_s0
        d["C_sigma"] = self.C_sigma
        return d


def _ratio(x: float, log_bound: float) -> float:
    if not np.isfinite(log_bound):
        return float("nan")
    if x <= 0:
        return 0.0
    return float(math.exp(math.log(x) - log_bound))


@dataclass
class IterationState:
    n: int
    Lambda: float
    M: float
    u: ScaleFunction
    history: list[StepRecord] = field(default_factory=list)


@dataclass
class ConvergenceReport:
    u: ScaleFunction
    residual: float
    u_s1: float
    steps: list[StepRecord]
    verdict: str
    n: int
    message: str = ""
    saturated: bool = False
    cauchy_ok: bool = True
    summability_ratio: float = float("nan")
    final_bound: float = float("nan")

    @property
    def converged(self) -> bool:
        return self.verdict == "converged"


# ---------------------------------------------------------------------------
# cutoffs and norms
# ---------------------------------------------------------------------------


def init_lambdas(K: float, eps: float, eta: float, alpha: float, theta: float,
                 check_order: bool = True) -> tuple[float, float, float, float]:
    """``(Lambda_0, Lambda_1, M_0, M_1)`` with ``Lambda_1 = K eps^{-eta}``."""
    if not (K >= 2 and 0 < eps <= 1 and alpha > 1 and 0 < theta <= 1):
        raise ParameterError(f"invalid inputs K={K} eps={eps} alpha={alpha} theta={theta}")
    lam1 = K * eps ** (-eta)
    lam0 = lam1 ** (1.0 / alpha)
    m0, m1 = lam0**theta, lam1**theta
    if check_order and theta < 1 and not (m0 < lam0 < m1 < lam1):
        raise ParameterError("cutoff ordering M0 < Lambda0 < M1 < Lambda1 needs alpha theta > 1")
    return lam0, lam1, m0, m1


def lambda_n(lam1: float, alpha: float, n: int) -> float:
    """``Lambda_n = Lambda_1^{alpha^{n-1}}`` (n = 0 gives ``Lambda_1^{1/alpha}``)."""
    return float(np.exp(alpha ** (n - 1) * np.log(lam1)))


def _level_norm_weights(lb: np.ndarray, n: int, p: FeasibleParams, s0: float, delta: float,
                        lam1: float, lam_prev: float) -> tuple[np.ndarray, np.ndarray]:
    """Log-weights of the two terms of the level norm at log-bracket ``lb``."""
    if n == 1:
        c = -(p.theta / p.alpha) * (p.sigma - delta) * np.log(lam1)
        return delta * lb, c + p.sigma * lb
    c = (-p.sigma + s0) * np.log(lam_prev)
    return s0 * lb, c + p.sigma * lb


def block_norm(u: ScaleFunction, n: int, p: FeasibleParams, s0: float, delta: float, lam1: float,
               lam_prev: float | None = None) -> float:
    """Level norm: ``||h||_delta + Lambda_1^{-(theta/alpha)(sigma-delta)} ||h||_sigma`` at
    level 1 and ``||x||_s0 + Lambda_{n-1}^{-sigma+s0} ||x||_sigma`` above."""
    if n > 1 and lam_prev is None:
        lam_prev = lambda_n(lam1, p.alpha, n - 1)
    lb = np.log(u.grid.bracket())
    w1, w2 = _level_norm_weights(lb, n, p, s0, delta, lam1, lam_prev if lam_prev else 1.0)
    from .fourier_scale import weighted_norm
    return weighted_norm(u.coefficients, w1) + weighted_norm(u.coefficients, w2)


def summability_majorant(alpha: float, beta: float, sigma: float, t: float, terms: int = 200) -> float:
    """``sum_{j >= 0} 2^{alpha^j (alpha beta - sigma + t)}`` (finite for t < sigma - alpha beta)."""
    expo = alpha * beta - sigma + t
    if expo >= 0:
        return math.inf
    total = 0.0
    for j in range(terms):
        term = 2.0 ** (alpha**j * expo)
        total += term
        if term < 1e-18 * total:
            break
    return total


def sufficient_condition_exponents(sig: TameSignature, p: FeasibleParams, delta: float) -> dict[str, float]:
    """Exponent bookkeeping of the per-step sufficient condition.

    Both sides are powers of ``eps^{-eta alpha^{n-2}}``; the condition holds
    for large ``K`` when ``margin = C7 - max(C3, C4) - max(C5, C6) > 0``.
    """
    a, b, th, sg = p.alpha, p.beta, p.theta, p.sigma
    C3 = a * (b + sig.ell) - sg + sig.s0 + sig.ell_p
    C4 = a * th * sig.ell_p
    C5 = th / a * (sig.s0 - delta)
    C6 = sig.g / p.eta + b + th * (-sg + sig.m + sig.s0)
    C7 = a * b - sg + sig.s0
    return {"C3": C3, "C4": C4, "C5": C5, "C6": C6, "C7": C7,
            "margin": C7 - max(C3, C4) - max(C5, C6),
            "dominant": ("C3" if C3 >= C4 else "C4") + "+" + ("C5" if C5 >= C6 else "C6")}


# ---------------------------------------------------------------------------
# level machinery
# ---------------------------------------------------------------------------


@dataclass
class _Level:
    n: int
    lam: float
    M: float
    lam_prev: float
    dom: np.ndarray
    rng_mask: np.ndarray
    norm_dom: WeightedNorm
    norm_rng: WeightedNorm
    saturated: bool


class _Context:
    """Per-run cached quantities (cutoffs, brackets, scalar factors)."""

    def __init__(self, problem: ModelProblem, v: ScaleFunction, ip: IterationParams, eps: float):
        self.problem = problem
        self.v = v
        self.ip = ip
        self.eps = eps
        self.sig = problem.signature
        p = ip.params
        self.p = p
        self.lam0, self.lam1, self.M0, self.M1 = init_lambdas(ip.K, eps, p.eta, p.alpha, p.theta)
        self.lb = np.log(problem.grid.bracket())
        self.top = problem.grid.max_bracket()
        self.v_delta = norm(v, NormSpec("plain", ip.delta))
        self.tol = ip.tol_final * (norm(v, NormSpec("plain", self.sig.s0)) if ip.relative_tol else 1.0)
        self.scale = eps ** (-self.sig.g) * (self.M1**self.sig.ell_p + self.lam1**self.sig.ell)
        self.rng = np.random.default_rng(ip.seed)
        self.galerkin = p.variant == "galerkin"

    def lam(self, n: int) -> float:
        return lambda_n(self.lam1, self.p.alpha, n)

    def M(self, n: int) -> float:
        return self.lam(n) ** self.p.theta

    def mask(self, cut: float) -> np.ndarray:
        return cutoff_mask(self.problem.grid, max(cut, 1.0))

    def level(self, n: int) -> _Level:
        lam = self.lam(n)
        M = lam if self.galerkin else self.M(n)
        lam_prev = self.lam(n - 1)
        dom = self.mask(lam)
        rmask = dom if self.galerkin else self.mask(M)
        comps = self.problem.grid.components

        def wn(mask):
            lbm = np.tile(self.lb[mask], comps)
            w1, w2 = _level_norm_weights(lbm, n, self.p, self.sig.s0, self.ip.delta, self.lam1, lam_prev)
            return WeightedNorm((w1, w2))

        return _Level(n, lam, M, lam_prev, dom, rmask, wn(dom), wn(rmask), lam >= self.top)

    def s_norm(self, u: ScaleFunction, s: float) -> float:
        return norm(u, NormSpec("plain", s))

    # right inverse at a base point ----------------------------------------
    def inverse_at(self, lev: _Level, base: ScaleFunction) -> NeumannInverse:
        prob = self.problem
        J = prob.jacobian(base, self.eps, lev.rng_mask, lev.dom)
        Df = BlockOperator.from_matrix(J, "Df")
        if self.galerkin:
            Lmat = np.linalg.inv(J)
        else:
            full = prob.right_inverse_matrix(base, self.eps)
            comps = prob.grid.components
            rows = np.tile(lev.dom.reshape(-1), comps)
            cols = np.tile(lev.rng_mask.reshape(-1), comps)
            Lmat = full[np.ix_(rows, cols)]
        L = BlockOperator.from_matrix(Lmat, "L")
        return neumann_right_inverse(Df, L, lev.norm_rng, self.ip.q_max, self.ip.term_tol,
                                     norm_dom=lev.norm_dom, probes=4, rng=self.rng)


def _solve_level(ctx: _Context, lev: _Level, base: ScaleFunction, target: np.ndarray, radius: float,
                 rec: StepRecord) -> SolveReport:
    prob = ctx.problem

    def f(z):
        zf = prob.from_flat(z, lev.dom)
        return prob.to_flat(prob.increment(base, zf, ctx.eps), lev.rng_mask)

    qs = []

    def T_at(z):
        u = base if z is None else base + prob.from_flat(z, lev.dom)
        inv = ctx.inverse_at(lev, u)
        qs.append(inv.q)
        return inv

    tol = max(min(ctx.ip.inner_tol, 1e-2 * ctx.tol), 1e-14 * lev.norm_rng(target))
    try:
        rep = solve_local(f, target, T_at, radius, lev.norm_dom, norm_out=lev.norm_rng, tol=tol,
                          budget=ctx.ip.budget, enforce_precondition=ctx.ip.enforce_preconditions)
    except ContractionError as exc:
        rec.q = exc.q
        rec.success = False
        raise StepFailure("contraction_failure", str(exc), rec) from exc
    except PreconditionError as exc:
        rec.success = False
        raise StepFailure("rejected", str(exc), rec) from exc
    rec.q = max(qs) if qs else 0.0
    rec.inner_iterations = rep.iterations
    rec.inner_residual = rep.residual
    rec.M_est = rep.M_est
    rec.admission_margin = radius / rep.M_est - lev.norm_rng(target) if rep.M_est > 0 else math.inf
    if not rep.success:
        rec.success = False
        verdict = "budget" if rep.reason == "budget" else "stalled"
        raise StepFailure(verdict, f"level {lev.n} inner solve failed: {rep.reason}", rec)
    return rep


def _residual(ctx: _Context, u: ScaleFunction) -> float:
    return ctx.s_norm(ctx.problem.evaluate(u, ctx.eps) - ctx.v, ctx.sig.s0)


def _project(u: ScaleFunction, mask: np.ndarray) -> ScaleFunction:
    return u.like(np.where(mask, u.coefficients, 0.0))


def initialize(problem: ModelProblem, v: ScaleFunction, ip: IterationParams, eps: float,
               _ctx: _Context | None = None) -> tuple[ScaleFunction, StepRecord]:
    """Solve ``Pi'_1 F(u) = Pi'_0 v`` in the unit ball of the level-1 norm."""
    ctx = _ctx or _Context(problem, v, ip, eps)
    lev = ctx.level(1)
    rec = StepRecord(1, lev.lam, lev.M, 1.0, saturated=lev.saturated)
    m0 = ctx.mask(ctx.lam0 if ctx.galerkin else ctx.M0)
    target_fn = _project(v, m0)
    target = problem.to_flat(target_fn, lev.rng_mask)
    rec.delta_v = lev.norm_rng(target)
    zero = problem.zero()
    rep = _solve_level(ctx, lev, zero, target, 1.0, rec)
    u1 = problem.from_flat(rep.solution, lev.dom)
    rec.dz_s0 = ctx.s_norm(u1, ctx.sig.s0)
    rec.dz_sigma = ctx.s_norm(u1, ctx.p.sigma)
    # bounds of the initial step: ||u1||_delta against eps^{-g}(M1^l' + L1^l)||v||_delta and
    # ||u1||_sigma against Lambda_1^{(theta/alpha)(sigma - delta)}
    rec.log_bound_s0 = math.log(ctx.scale * ctx.v_delta) if ctx.v_delta > 0 else -math.inf
    rec.log_bound_sigma = ctx.p.theta / ctx.p.alpha * (ctx.p.sigma - ip.delta) * math.log(ctx.lam1)
    rec.dz_s0 = ctx.s_norm(u1, ip.delta)
    rec.u_s1 = ctx.s_norm(u1, ip.s1)
    rec.residual = _residual(ctx, u1)
    return u1, rec


def step(problem: ModelProblem, state: IterationState, v: ScaleFunction, ip: IterationParams, eps: float,
         _ctx: _Context | None = None) -> IterationState:
    """Advance from level ``n-1`` to level ``n = state.n + 1``."""
    ctx = _ctx or _Context(problem, v, ip, eps)
    p, sig = ctx.p, ctx.sig
    n = state.n + 1
    lev = ctx.level(n)
    lam_prev = lev.lam_prev
    r_n = ctx.scale * math.exp((p.alpha * p.beta - p.sigma + sig.s0) * math.log(lam_prev)) * ctx.v_delta
    rec = StepRecord(n, lev.lam, lev.M, r_n, saturated=lev.saturated)
    u_prev = state.u
    cut = (lambda k: ctx.lam(k)) if ctx.galerkin else (lambda k: ctx.M(k))
    m_prev, m_prev2 = ctx.mask(cut(n - 1)), ctx.mask(cut(n - 2))
    Fu = problem.evaluate(u_prev, eps)
    dv = _project(v, m_prev) - _project(v, m_prev2)
    e_n = -(_project(Fu, lev.rng_mask) - _project(Fu, m_prev))
    rec.telescoping = ctx.s_norm(_project(Fu, m_prev) - _project(v, m_prev2), sig.s0)
    dv_flat = problem.to_flat(dv, lev.rng_mask)
    e_flat = problem.to_flat(e_n, lev.rng_mask)
    rec.delta_v = lev.norm_rng(dv_flat)
    rec.e_norm = lev.norm_rng(e_flat)
    if ctx.v_delta > 0:
        rec.delta_v_ratio = rec.delta_v / (cut(n - 2) ** (sig.s0 - ip.delta) * ctx.v_delta)
        log_e_bound = (math.log(ctx.scale * ctx.v_delta) + p.beta * math.log(lam_prev)
                       + (-p.sigma + sig.m + sig.s0) * math.log(cut(n - 1)))
        rec.e_ratio = math.exp(math.log(rec.e_norm) - log_e_bound) if rec.e_norm > 0 else 0.0
    target = dv_flat + e_flat
    if lev.norm_rng(target) == 0.0:
        z = problem.zero()
    else:
        rep = _solve_level(ctx, lev, u_prev, target, r_n, rec)
        z = problem.from_flat(rep.solution, lev.dom)
    u_new = u_prev + z
    rec.dz_s0 = ctx.s_norm(z, sig.s0)
    rec.dz_sigma = ctx.s_norm(z, p.sigma)
    log_base = math.log(ctx.scale * ctx.v_delta)
    rec.log_bound_s0 = log_base + (p.alpha * p.beta - p.sigma + sig.s0) * math.log(lam_prev)
    rec.log_bound_sigma = log_base + p.alpha * p.beta * math.log(lam_prev)
    rec.u_s1 = ctx.s_norm(u_new, ip.s1)
    rec.residual = _residual(ctx, u_new)
    if rec.u_s1 > 1.0:
        rec.success = False
        rec.note = "||u_n||_s1 > 1"
    hist = state.history + [rec]
    return IterationState(n, lev.lam, lev.M, u_new, hist)


def run(problem: ModelProblem, v: ScaleFunction, ip: IterationParams, eps: float, *,
        enforce_regime: bool = True) -> ConvergenceReport:
    """Initialize, then step until the residual meets ``tol_final`` or ``n_max``.

    Numerical failure modes are reported through the verdict, never raised.
    ``enforce_regime`` rejects targets with ``||v||_delta > r eps^{g'}`` up front.
    """
    ctx = _Context(problem, v, ip, eps)
    zero = problem.zero()
    if ctx.v_delta == 0.0:
        rec = StepRecord(1, ctx.lam1, ctx.M1, 1.0, residual=0.0)
        return ConvergenceReport(zero, 0.0, 0.0, [rec], "converged", 1, "zero target")
    if enforce_regime and ip.r is not None and ctx.v_delta > ip.r * eps**ip.g_p:
        return ConvergenceReport(zero, _residual(ctx, zero), 0.0, [], "rejected", 0,
                                 f"||v||_delta = {ctx.v_delta:.4g} above r eps^g' = {ip.r * eps ** ip.g_p:.4g}")
    history: list[StepRecord] = []
    try:
        u, rec = initialize(problem, v, ip, eps, ctx)
    except StepFailure as exc:
        recs = [exc.record] if exc.record else []
        return ConvergenceReport(zero, _residual(ctx, zero), 0.0, recs, exc.verdict, 1, str(exc))
    history.append(rec)
    state = IterationState(1, ctx.lam1, ctx.M1, u, history)
    verdict, message = "budget", f"n_max = {ip.n_max} reached"
    while True:
        last = state.history[-1]
        if last.residual <= ctx.tol and last.u_s1 <= 1.0:
            verdict, message = "converged", ""
            break
        if not last.success:
            verdict, message = "stalled", last.note
            break
        if state.n >= ip.n_max:
            break
        try:
            state = step(problem, state, v, ip, eps, ctx)
        except StepFailure as exc:
            if exc.record is not None:
                state.history.append(exc.record)
            verdict, message = exc.verdict, str(exc)
            break
    u = state.u
    report = ConvergenceReport(u, _residual(ctx, u), ctx.s_norm(u, ip.s1), state.history, verdict, state.n,
                               message, saturated=any(r.saturated for r in state.history))
    _cauchy(ctx, report)
    if verdict == "converged" and ip.r is not None:
        report.final_bound = ctx.v_delta / (ip.r * eps**ip.g_p)
        if report.u_s1 > report.final_bound * (1 + 1e-12):
            report.verdict = "bound_violation"
            report.message = "||u||_s1 above r^{-1} eps^{-g'} ||v||_delta"
    return report


def _cauchy(ctx: _Context, report: ConvergenceReport) -> None:
    """Summability of the increments at ``t1`` midway between s1 and sigma - alpha beta."""
    p = ctx.p
    t1 = 0.5 * (ctx.ip.s1 + p.sigma - p.alpha * p.beta)
    sigma_t = summability_majorant(p.alpha, p.beta, p.sigma, t1)
    recs = [r for r in report.steps if r.n >= 2]
    if not recs or ctx.v_delta == 0:
        return
    # increments at t1 follow from the stored s0 and sigma norms by interpolation
    w = (t1 - ctx.sig.s0) / (p.sigma - ctx.sig.s0)
    incs = [r.dz_s0 ** (1 - w) * r.dz_sigma**w if r.dz_s0 > 0 else 0.0 for r in recs]
    partial = np.cumsum(incs)
    report.summability_ratio = float(partial[-1] / (ctx.scale * sigma_t * ctx.v_delta))
    report.cauchy_ok = bool(np.all(np.isfinite(partial)))


# ---------------------------------------------------------------------------
# K adaptation and regime calibration
# ---------------------------------------------------------------------------


def adapt_K(problem: ModelProblem, ip: IterationParams, eps: float, K_max: float = 2.0**10,
            probe_amplitude: float = 0.0) -> float:
    """Double ``K`` from 2 until the contraction factors at levels 1 and 2 are
    at most ``q_max``; raises :class:`ContractionError` beyond ``K_max``.

    Probes are taken at the origin and, when ``probe_amplitude > 0``, at a
    random base point of that level-norm size.
    """
    K = 2.0
    last_q = math.inf
    while K <= K_max:
        trial = replace(ip, K=K)
        ctx = _Context(problem, problem.zero(), trial, eps)
        levels = [1] if ctx.galerkin else [1, 2]
        worst = 0.0
        for n in levels:
            lev = ctx.level(n)
            bases = [problem.zero()]
            if probe_amplitude > 0:
                x = ctx.rng.standard_normal(int(lev.dom.sum())) + 0j
                x *= probe_amplitude / lev.norm_dom(x)
                bases.append(problem.from_flat(x, lev.dom))
            for b in bases:
                try:
                    inv = ctx.inverse_at(lev, b)
                    worst = max(worst, inv.q)
                except ContractionError as exc:
                    worst = max(worst, exc.q)
        last_q = worst
        if worst <= ip.q_max:
            return K
        K *= 2.0
    raise ContractionError(last_q, ip.q_max)


def calibrate_r(problem: ModelProblem, profile: ScaleFunction, ip: IterationParams,
                eps_probe=(0.5, 0.25, 0.125), r_lo: float = 1e-8, r_hi: float = 1e2,
                steps: int = 30) -> float:
    """Largest ``r`` (bisected in log scale) whose runs converge at every probe
    ``eps`` with ``||v||_delta = r eps^{g'}``."""
    unit = profile * (1.0 / norm(profile, NormSpec("plain", ip.delta)))

    def ok(r):
        for eps in eps_probe:
            v = unit * (r * eps**ip.g_p)
            rep = run(problem, v, replace(ip, r=None), eps, enforce_regime=False)
            if not rep.converged:
                return False
        return True

    if not ok(r_lo):
        raise RuntimeError(f"no convergence even at r = {r_lo}")
    if ok(r_hi):
        return r_hi
    lo, hi = math.log(r_lo), math.log(r_hi)
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if ok(math.exp(mid)):
            lo = mid
        else:
            hi = mid
    return math.exp(lo)
