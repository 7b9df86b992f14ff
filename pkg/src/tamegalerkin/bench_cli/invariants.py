"""Randomized invariant suites, one per library module.

Each suite returns a list of :class:`CheckResult`.  Fault injection for the
scale axioms goes through the constants passed in (``A1``, ``A2``, ``A3``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..fourier_scale import (
    FrequencyGrid,
    NormSpec,
    ScaleConstants,
    ScaleFunction,
    cutoff_mask,
    from_bytes,
    interpolation_check,
    norm,
    product,
    project,
    random_function,
    single_mode,
    to_bytes,
    verify_approx,
    verify_growth,
)
from ..galerkin_iteration import IterationParams, ParameterError, init_lambdas, lambda_n, run
from ..param_solver import (
    TameSignature,
    UserTargets,
    check_constraints,
    constraint_margins,
    default_eta,
    rewritten_margins,
    slope_ordering,
    solve_params,
)
from ..problems import NlsResidualProblem, SmallDivisorProblem, gateaux_check
from ..surjection_solver import (
    BlockOperator,
    WeightedNorm,
    neumann_right_inverse,
    neumann_terms,
)

__all__ = ["CheckResult", "SUITES", "run_suites", "scale_axiom_checks", "p1_block_inverse"]


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str = ""


# ---------------------------------------------------------------------------
# fourier_scale
# ---------------------------------------------------------------------------


def scale_axiom_checks(N_list=(16, 32, 64), draws: int = 200, S: float = 8.0, A1: float | None = None,
                       A2: float = 1.0, A3: float = 1.0, rel_slack: float = 1e-10,
                       seed: int = 0) -> list[CheckResult]:
    """Growth, approximation and interpolation inequalities on random data.

    A fifth of the draws are single modes just above the cutoff, where the
    approximation inequality is tight.  The constants are the bounds the
    measured ratios are compared with, so passing values below the true
    constants injects a fault.
    """
    rng = np.random.default_rng(seed)
    A1 = 2.0 ** (S / 2) if A1 is None else float(A1)
    consts = ScaleConstants.fourier(S)
    out = []
    for N in N_list:
        grid = FrequencyGrid(1, N)
        worst = {"growth": 0.0, "approx": 0.0}
        interp_ok = True
        for i in range(draws):
            lam = float(rng.uniform(1.0, N))
            if i % 5 == 0:
                k = min(N, int(np.floor(np.sqrt(max(lam**2 - 1.0, 0.0)))) + 1)
                u = single_mode(grid, k)
            else:
                u = random_function(grid, rng, decay=float(rng.uniform(0.0, 3.0)))
            s, t = sorted(rng.uniform(0.0, S, size=2))
            g = verify_growth(u, float(s), float(t), lam, consts)
            a = verify_approx(u, float(t), float(s), lam, consts)
            worst["growth"] = max(worst["growth"], g.ratio / A1)
            worst["approx"] = max(worst["approx"], a.ratio / A2)
            t1, mid, t2 = sorted(rng.uniform(0.0, S, size=3))
            interp_ok &= interpolation_check(u, float(t1), float(mid), float(t2), A3, rel_slack)
        out.append(CheckResult("fourier", f"growth_N{N}", worst["growth"] <= 1.0 + 1e-12,
                               f"max ratio/A1 = {worst['growth']:.6g}"))
        out.append(CheckResult("fourier", f"approximation_N{N}", worst["approx"] <= 1.0 + 1e-12,
                               f"max ratio/A2 = {worst['approx']:.6g}"))
        out.append(CheckResult("fourier", f"interpolation_N{N}", bool(interp_ok), f"A3 = {A3}"))
    return out


def fourier_suite(opts: dict) -> list[CheckResult]:
    draws = int(opts.get("draws", 200))
    res = scale_axiom_checks(draws=draws, A1=opts.get("A1"), A2=float(opts.get("A2", 1.0)),
                             A3=float(opts.get("A3", 1.0)), seed=int(opts.get("seed", 0)))
    rng = np.random.default_rng(1)
    grid = FrequencyGrid(1, 16)
    u = random_function(grid, rng, decay=1.0)
    pu = project(u, 5.0)
    res.append(CheckResult("fourier", "projector_idempotent",
                           bool(np.allclose(project(pu, 5.0).coefficients, pu.coefficients))))
    ur = random_function(grid, rng, decay=1.0, real=True)
    wr = random_function(grid, rng, decay=1.0, real=True)
    prod = product(ur, wr)
    res.append(CheckResult("fourier", "real_product_real", prod.real))
    back = from_bytes(to_bytes(u))
    res.append(CheckResult("fourier", "serialization_roundtrip",
                           bool(np.array_equal(back.coefficients, u.coefficients))))
    return res


# ---------------------------------------------------------------------------
# param_solver
# ---------------------------------------------------------------------------

NLS_SIGNATURE = TameSignature(s0=3.5, m=2.0, ell=2.0, ell_p=0.0, g=2.0)
NLS_TARGETS = UserTargets(s1=5.5, delta=6.0, g_p=2.5)
P1_SIGNATURE = TameSignature(s0=1.0, m=1.0, ell=1.0, ell_p=1.0, g=1.0)
P1_TARGETS = UserTargets(s1=2.0, delta=10.0, g_p=1.25)


def params_suite(opts: dict) -> list[CheckResult]:
    res = []
    for label, sig, tgt in (("nls", NLS_SIGNATURE, NLS_TARGETS), ("p1", P1_SIGNATURE, P1_TARGETS)):
        for variant in ("full", "galerkin"):
            eta = default_eta(sig, tgt, variant)
            p = solve_params(sig, tgt, eta, variant)
            bad = check_constraints(sig, tgt, p)
            res.append(CheckResult("params", f"feasible_{label}_{variant}", not bad, ",".join(bad)))
            if variant == "full":
                res.append(CheckResult("params", f"slope_ordering_{label}", slope_ordering(p)))
                res.append(CheckResult("params", f"alpha_theta_above_one_{label}", p.alpha * p.theta > 1.0))
                m = constraint_margins(sig, tgt, p)
                res.append(CheckResult("params", f"delta_regularity_implies_beta_gap_{label}",
                                       (m["delta_regularity"] > 0) <= (m["beta_above_gap"] > 0)))
                rw = rewritten_margins(sig, tgt, p)
                agree = all((rw[k] > 0) == (m[k] > 0) for k in rw)
                res.append(CheckResult("params", f"rewritten_forms_agree_{label}", agree))
                reduced = check_constraints(sig, tgt, p, variant="galerkin")
                res.append(CheckResult("params", f"galerkin_contains_full_{label}", not reduced,
                                       ",".join(reduced)))
    return res


# ---------------------------------------------------------------------------
# surjection_solver
# ---------------------------------------------------------------------------


def p1_block_inverse(problem: SmallDivisorProblem, u: ScaleFunction, eps: float, lam: float,
                     s: float = 1.0, term_tol: float = 1e-10, probes: int = 20, seed: int = 0):
    """Neumann right inverse of the P1 block ``|k| <= lam`` at ``u`` with the
    frozen inverse ``A_eps^{-1}`` as the approximate inverse and the
    ``H^s`` norm on the block."""
    mask = (problem.grid.bracket() <= lam)
    J = problem.jacobian(u, eps, rows=mask, cols=mask)
    Linv = np.diag(problem.inverse_symbol(eps)[mask.reshape(-1)]).astype(complex)
    nrm = WeightedNorm.sobolev(problem.grid.bracket()[mask], s)
    inv = neumann_right_inverse(BlockOperator.from_matrix(J, "Df"), BlockOperator.from_matrix(Linv, "L"),
                                nrm, term_tol=term_tol, probes=probes, rng=np.random.default_rng(seed))
    return inv, J, nrm


def surjection_suite(opts: dict) -> list[CheckResult]:
    res = [CheckResult("surjection", "neumann_terms_half", neumann_terms(0.5, 1e-8) >= 26,
                       f"terms = {neumann_terms(0.5, 1e-8)}")]
    prob = SmallDivisorProblem(N=16)
    rng = np.random.default_rng(2)
    u = random_function(prob.grid, rng, decay=2.0) * 1e-3
    inv, J, nrm = p1_block_inverse(prob, u, 0.5, 8.0, term_tol=1e-10)
    res.append(CheckResult("surjection", "right_inverse_probe", inv.probe_residual <= 2e-10,
                           f"residual {inv.probe_residual:.3g}, q = {inv.q:.3g}"))
    res.append(CheckResult("surjection", "norm_bound", inv.T_norm <= 2.0 * inv.L_norm * 1.05,
                           f"|T| = {inv.T_norm:.4g}, |L| = {inv.L_norm:.4g}"))
    res.append(CheckResult("surjection", "linearity", inv.T.check_linearity(rng)))
    return res


# ---------------------------------------------------------------------------
# galerkin_iteration
# ---------------------------------------------------------------------------


def galerkin_suite(opts: dict) -> list[CheckResult]:
    res = []
    p = solve_params(P1_SIGNATURE, P1_TARGETS, default_eta(P1_SIGNATURE, P1_TARGETS))
    L0, L1, M0, M1 = init_lambdas(2.0, 0.5, p.eta, p.alpha, p.theta)
    res.append(CheckResult("galerkin", "cutoff_ordering", M0 < L0 < M1 < L1))
    res.append(CheckResult("galerkin", "cutoff_recursion",
                           abs(lambda_n(L1, p.alpha, 3) - L1 ** (p.alpha**2)) <= 1e-9 * L1 ** (p.alpha**2)))
    try:
        IterationParams.from_targets(p, P1_TARGETS, K=1.5)
        k_ok = False
    except ParameterError:
        k_ok = True
    res.append(CheckResult("galerkin", "K_at_least_two", k_ok))
    prob = SmallDivisorProblem(N=16)
    ip = IterationParams.from_targets(p, P1_TARGETS, relative_tol=True)
    v = single_mode(prob.grid, 1, 1e-9)
    rep = run(prob, v, ip, 0.5)
    res.append(CheckResult("galerkin", "small_target_converges", rep.converged, rep.verdict))
    outside = ~cutoff_mask(prob.grid, rep.steps[-1].Lambda)
    res.append(CheckResult("galerkin", "iterate_supported_in_block",
                           float(np.max(np.abs(rep.u.coefficients[:, outside]), initial=0.0)) == 0.0))
    res.append(CheckResult("galerkin", "zero_target", run(prob, prob.zero(), ip, 0.5).converged))
    return res


# ---------------------------------------------------------------------------
# problems
# ---------------------------------------------------------------------------


def problems_suite(opts: dict) -> list[CheckResult]:
    res = []
    rng = np.random.default_rng(3)
    p1 = SmallDivisorProblem(N=16)
    res.append(CheckResult("problems", "p1_zero_maps_to_zero", norm(p1.evaluate(p1.zero(), 0.5),
                                                                     NormSpec("plain", 0.0)) == 0.0))
    k = random_function(p1.grid, rng, decay=1.0)
    back = p1.apply_d(p1.zero(), p1.right_inverse_at_zero(k, 0.5), 0.5)
    res.append(CheckResult("problems", "p1_inverse_at_zero",
                           bool(np.allclose(back.coefficients, k.coefficients, rtol=1e-12, atol=1e-14))))
    u = random_function(p1.grid, rng, decay=2.0)
    h = random_function(p1.grid, rng, decay=2.0)
    g = gateaux_check(lambda w: p1.evaluate(w, 0.5), lambda x: p1.apply_d(u, x, 0.5), u, h,
                      lambda x: x.norm(1.0))
    res.append(CheckResult("problems", "p1_gateaux_first_order", g.first_order, f"slope {g.slope:.4f}"))
    p2 = NlsResidualProblem(N=6)
    res.append(CheckResult("problems", "p2_transparency", p2.transparency().ok))
    zero_res = p2.evaluate(p2.zero(), 0.5)
    res.append(CheckResult("problems", "p2_zero_maps_to_zero", float(np.max(np.abs(zero_res.coefficients))) == 0.0))
    u2 = random_function(p2.grid, rng, decay=3.0) * 0.05
    h2 = random_function(p2.grid, rng, decay=3.0)
    g2 = gateaux_check(lambda w: p2.evaluate(w, 0.5), lambda x: p2.apply_d(u2, x, 0.5), u2, h2,
                       lambda x: p2.space_time_norm(x, 2.0, 0.5))
    res.append(CheckResult("problems", "p2_gateaux_first_order", g2.first_order, f"slope {g2.slope:.4f}"))
    return res


SUITES: dict[str, Callable[[dict], list[CheckResult]]] = {
    "fourier": fourier_suite,
    "params": params_suite,
    "surjection": surjection_suite,
    "galerkin": galerkin_suite,
    "problems": problems_suite,
}


def run_suites(names: list[str] | None = None, opts: dict | None = None) -> list[CheckResult]:
    opts = opts or {}
    chosen = names or list(SUITES)
    unknown = [n for n in chosen if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite(s): {', '.join(unknown)}")
    out = []
    for n in chosen:
        out.extend(SUITES[n](opts))
    return out
