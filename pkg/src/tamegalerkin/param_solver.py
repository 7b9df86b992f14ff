"""Feasible exponent tuples for the Galerkin surjection scheme.

The scheme is driven by five exponents (eta, alpha, beta, theta, sigma) that
must satisfy a list of strict linear inequalities depending on the problem
signature (s0, m, l, l', g) and on the user targets (s1, delta, g').
``check_constraints`` evaluates the inequalities as written; ``solve_params``
constructs a tuple by the standard recipe: take theta = alpha^{-1/2} with alpha
close to 1, tie beta to sigma along a line, and take sigma above the largest
lower bound that the remaining inequalities impose on it.

Constraint identifiers (full variant):

    eta_bound                eta < (g'-g) / max(theta l', l)
    theta_window             1/alpha < theta < 1
    low_block_contraction    (1-theta)(sigma-delta) > theta m + max(l, theta l') + g/eta
    sigma_above_beta         sigma > alpha beta + s1
    high_block_contraction   (1+alpha-theta alpha)(sigma-s0) > alpha beta + alpha(m+l) + l' + g/eta
    tail_contraction         (1-theta)(sigma-s0) > m + theta l' + g/(alpha eta)
    delta_regularity         delta > s0 + (alpha/theta)(sigma - s0 - alpha beta + l'')
    beta_growth              (alpha-1) beta > (1-theta)(sigma-s0) + theta m + l'' + g/eta
    ell_double_prime         l'' = max((alpha-1) l + l', alpha theta l')
    beta_above_gap           beta > (sigma-delta)/alpha          (implied by delta_regularity)

The Galerkin variant allows theta = 1, replaces ``low_block_contraction`` by
``sigma_above_delta`` (sigma > delta) and drops ``high_block_contraction`` and
``tail_contraction``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, replace
from typing import Iterable

import numpy as np

__all__ = [
    "TameSignature",
    "UserTargets",
    "FeasibleParams",
    "InfeasibleError",
    "ell_double_prime",
    "constraint_margins",
    "rewritten_margins",
    "check_constraints",
    "solve_params",
    "minimal_S",
    "canonical_eta",
    "default_eta",
    "sigma_growth_scan",
    "slope_ordering",
    "ScanRow",
    "active_bound",
    "gap_scan",
    "piecewise_affine_fit",
]

ALPHA_FLOOR = 1.0 + 1e-4


class InfeasibleError(ValueError):
    """Targets or parameters that cannot satisfy the hypotheses.

    ``hypothesis`` names the failed condition.
    """

    def __init__(self, hypothesis: str, message: str):
        super().__init__(f"{hypothesis}: {message}")
        self.hypothesis = hypothesis


@dataclass(frozen=True)
class TameSignature:
    """Regularity base s0, losses m, l, l', singularity strength g, tame
    constants a, b and (optionally) the scale ceiling S."""

    s0: float
    m: float
    ell: float
    ell_p: float
    g: float
    a: float = 1.0
    b: float = 1.0
    S: float | None = None

    def __post_init__(self):
        for name in ("s0", "m", "ell", "ell_p", "g"):
            if getattr(self, name) < 0:
                raise InfeasibleError("signature", f"{name} must be nonnegative")
        if self.a <= 0 or self.b <= 0:
            raise InfeasibleError("signature", "tame constants a, b must be positive")
        if self.S is not None and not self.S > self.s0 + max(self.m, self.ell) + self.ell_p:
            raise InfeasibleError("signature", "S must exceed s0 + max(m, l) + l'")


@dataclass(frozen=True)
class UserTargets:
    s1: float
    delta: float
    g_p: float

    def validate(self, sig: TameSignature) -> None:
        if self.s1 < sig.s0 + max(sig.m, sig.ell):
            raise InfeasibleError("s1 >= s0 + max(m, l)",
                                  f"s1={self.s1} below {sig.s0 + max(sig.m, sig.ell)}")
        if not self.delta > self.s1 + sig.ell_p:
            raise InfeasibleError("delta > s1 + l'",
                                  f"delta={self.delta} not above s1 + l' = {self.s1 + sig.ell_p}")
        if not self.g_p > sig.g:
            raise InfeasibleError("g' > g", f"g'={self.g_p} not above g={sig.g}")


@dataclass(frozen=True)
class FeasibleParams:
    eta: float
    alpha: float
    beta: float
    theta: float
    sigma: float
    tau: float
    ell2: float
    variant: str = "full"
    sigma_bar: float = float("nan")

    @property
    def zeta(self) -> float:
        """A posteriori constant with sigma_bar = zeta g / eta (needs g > 0)."""
        return self.sigma_bar * self.eta

    def as_dict(self) -> dict:
        return asdict(self)


def ell_double_prime(alpha: float, theta: float, ell: float, ell_p: float) -> float:
    """``l'' = max((alpha-1) l + l', alpha theta l')``."""
    return max((alpha - 1.0) * ell + ell_p, alpha * theta * ell_p)


# ---------------------------------------------------------------------------
# checking
# ---------------------------------------------------------------------------


def constraint_margins(sig: TameSignature, tgt: UserTargets, p: FeasibleParams,
                       variant: str | None = None) -> dict[str, float]:
    """Signed margin (lhs - rhs, positive when satisfied) of every inequality,
    evaluated in the form the conditions are stated."""
    variant = variant or p.variant
    s0, m, l, lp, g = sig.s0, sig.m, sig.ell, sig.ell_p, sig.g
    s1, delta, gp = tgt.s1, tgt.delta, tgt.g_p
    eta, a, b, th, sg, l2 = p.eta, p.alpha, p.beta, p.theta, p.sigma, p.ell2
    out: dict[str, float] = {}
    out["eta_bound"] = (gp - g) / max(th * lp, l) - eta if max(th * lp, l) > 0 else math.inf
    out["alpha_above_one"] = a - 1.0
    out["theta_lower"] = th - 1.0 / a
    if variant == "full":
        out["theta_upper"] = 1.0 - th
        out["low_block_contraction"] = (1 - th) * (sg - delta) - (th * m + max(l, th * lp) + g / eta)
        out["high_block_contraction"] = ((1 + a - th * a) * (sg - s0)
                                         - (a * b + a * (m + l) + lp + g / eta))
        out["tail_contraction"] = (1 - th) * (sg - s0) - (m + th * lp + g / (a * eta))
    else:
        out["theta_upper"] = 1.0 - th if th > 1.0 else math.inf
        out["sigma_above_delta"] = sg - delta
    out["sigma_above_beta"] = sg - (a * b + s1)
    out["delta_regularity"] = delta - (s0 + (a / th) * (sg - s0 - a * b + l2))
    out["beta_growth"] = (a - 1) * b - ((1 - th) * (sg - s0) + th * m + l2 + g / eta)
    expected = ell_double_prime(a, th, l, lp)
    out["ell_double_prime"] = -abs(l2 - expected) if abs(l2 - expected) > 1e-12 * max(1.0, expected) else math.inf
    out["beta_above_gap"] = b - (sg - delta) / a
    return out


def rewritten_margins(sig: TameSignature, tgt: UserTargets, p: FeasibleParams) -> dict[str, float]:
    """Margins of the inequalities in the form solved for sigma or beta.

    Each is an algebraic rearrangement of one stated condition (dividing by a
    positive factor), so its sign agrees with the matching entry of
    :func:`constraint_margins` whenever the full-variant window holds.
    """
    s0, m, l, lp, g = sig.s0, sig.m, sig.ell, sig.ell_p, sig.g
    delta = tgt.delta
    eta, a, b, th, sg, l2 = p.eta, p.alpha, p.beta, p.theta, p.sigma, p.ell2
    out = {
        "low_block_contraction": sg - (delta + (th * m + max(l, th * lp) + g / eta) / (1 - th)),
        "high_block_contraction": ((1 / a + 1 - th) * sg - m - l - lp / a
                                   - (1 / a + 1 - th) * s0 - g / (a * eta)) - b,
        "tail_contraction": sg - (s0 + (m + th * lp + g / (a * eta)) / (1 - th)),
        "beta_growth": b - ((1 - th) / (a - 1) * sg + (th * m + l2 + g / eta - (1 - th) * s0) / (a - 1)),
    }
    return out


def check_constraints(sig: TameSignature, tgt: UserTargets, p: FeasibleParams,
                      variant: str | None = None) -> list[str]:
    """Identifiers of every violated strict inequality (empty when feasible)."""
    return [k for k, v in constraint_margins(sig, tgt, p, variant).items() if not v > 0]


def slope_ordering(p: FeasibleParams) -> bool:
    """``0 < (1-theta)/(alpha-1) < 1/alpha < 1/alpha + 1 - theta < 1``."""
    a, th = p.alpha, p.theta
    s15 = (1 - th) / (a - 1)
    s10 = 1 / a
    s13 = 1 / a + 1 - th
    return 0 < s15 < s10 < s13 < 1


# ---------------------------------------------------------------------------
# solving
# ---------------------------------------------------------------------------


def _slack(x: float) -> float:
    return max(0.01, 0.01 * abs(x))


def _choose_alpha(sig: TameSignature, tgt: UserTargets, variant: str) -> tuple[float, float, float]:
    """Largest alpha in 2, 1.5, 1.25, ... meeting the delta condition."""
    k = 0
    while True:
        a = 1.0 + 2.0**-k
        if a < ALPHA_FLOOR:
            raise InfeasibleError("alpha close to 1",
                                  "no alpha above 1 + 1e-4 satisfies the delta condition")
        th = a**-0.5 if variant == "full" else 1.0
        l2 = ell_double_prime(a, th, sig.ell, sig.ell_p)
        if tgt.delta > sig.s0 + (a / th) * (tgt.s1 - sig.s0 + l2):
            return a, th, l2
        k += 1


def _sigma_bounds(sig: TameSignature, tgt: UserTargets, eta: float, a: float, th: float,
                  l2: float, tau: float, variant: str) -> dict[str, float]:
    """Lower bounds on sigma once beta = (sigma - s1 - tau)/alpha is imposed."""
    s0, m, l, lp, g = sig.s0, sig.m, sig.ell, sig.ell_p, sig.g
    s1, delta = tgt.s1, tgt.delta
    c = s1 + tau
    if variant == "galerkin":
        return {
            "sigma_above_delta": delta,
            "beta_growth": c + a * (m + l2 + g / eta) / (a - 1),
        }
    bounds = {
        "low_block_contraction": delta + (th * m + max(l, th * lp) + g / eta) / (1 - th),
        "tail_contraction": s0 + (m + th * lp + g / (a * eta)) / (1 - th),
    }
    # beta < (1/a + 1 - th) sigma - C  with beta = (sigma - c)/a
    C13 = m + l + lp / a + (1 / a + 1 - th) * s0 + g / (a * eta)
    bounds["high_block_contraction"] = (C13 - c / a) / (1 - th)
    # beta > (1-th)/(a-1) sigma + D  with beta = (sigma - c)/a
    D15 = (th * m + l2 + g / eta - (1 - th) * s0) / (a - 1)
    bounds["beta_growth"] = (c / a + D15) / (1 / a - (1 - th) / (a - 1))
    return bounds


def solve_params(sig: TameSignature, tgt: UserTargets, eta: float, variant: str = "full") -> FeasibleParams:
    """Construct a feasible exponent tuple for the given ``eta``.

    Raises :class:`InfeasibleError` naming the failed hypothesis when the
    targets are inconsistent or ``eta`` is too large for the chosen theta.
    """
    if variant not in ("full", "galerkin"):
        raise ValueError(f"unknown variant {variant!r}")
    tgt.validate(sig)
    if not eta > 0:
        raise InfeasibleError("eta > 0", f"eta={eta}")
    a, th, l2 = _choose_alpha(sig, tgt, variant)
    eta_max = (tgt.g_p - sig.g) / max(th * sig.ell_p, sig.ell) if max(th * sig.ell_p, sig.ell) > 0 else math.inf
    if not eta < eta_max:
        raise InfeasibleError("eta_bound", f"eta={eta} must be below (g'-g)/max(theta l', l) = {eta_max}")
    room = (th / a) * (tgt.delta - sig.s0) - tgt.s1 + sig.s0 - l2
    tau = 0.5 * room
    bounds = _sigma_bounds(sig, tgt, eta, a, th, l2, tau, variant)
    sigma_bar = max(bounds.values())
    sigma = sigma_bar + _slack(sigma_bar)
    beta = (sigma - tgt.s1 - tau) / a
    p = FeasibleParams(eta=eta, alpha=a, beta=beta, theta=th, sigma=sigma, tau=tau, ell2=l2,
                       variant=variant, sigma_bar=sigma_bar)
    bad = check_constraints(sig, tgt, p)
    if bad:
        raise InfeasibleError(bad[0], f"constructed tuple fails {bad}")
    return p


def active_bound(sig: TameSignature, tgt: UserTargets, p: FeasibleParams) -> str:
    """Which lower bound on sigma determines sigma_bar."""
    bounds = _sigma_bounds(sig, tgt, p.eta, p.alpha, p.theta, p.ell2, p.tau, p.variant)
    return max(bounds, key=bounds.get)


def minimal_S(p: FeasibleParams, sig: TameSignature, margin: float = 1.0) -> float:
    """Scale ceiling needed by the iteration: sigma + max(l, l', m) + margin."""
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    if margin == 0:
        warnings.warn("minimal_S with zero margin leaves no room above sigma", RuntimeWarning, stacklevel=2)
    return p.sigma + max(sig.ell, sig.ell_p, sig.m) + margin


def canonical_eta(sig: TameSignature, tgt: UserTargets, theta: float) -> float:
    """Half of the admissible range: (g'-g) / (2 max(theta l', l))."""
    return (tgt.g_p - sig.g) / (2.0 * max(theta * sig.ell_p, sig.ell))


def default_eta(sig: TameSignature, tgt: UserTargets, variant: str = "full") -> float:
    """Canonical eta for the theta that :func:`solve_params` will pick."""
    tgt.validate(sig)
    _, th, _ = _choose_alpha(sig, tgt, variant)
    return canonical_eta(sig, tgt, th)


@dataclass(frozen=True)
class ScanRow:
    eta: float
    g_over_eta: float
    sigma_bar: float
    S0: float
    active: str
    g_gap: float


def sigma_growth_scan(sig: TameSignature, tgt: UserTargets, eta_grid: Iterable[float],
                      variant: str = "full", margin: float = 1.0) -> list[ScanRow]:
    """sigma_bar(eta) and S0(eta) = minimal_S over a grid of eta values."""
    rows = []
    for eta in eta_grid:
        p = solve_params(sig, tgt, float(eta), variant)
        rows.append(ScanRow(float(eta), sig.g / float(eta), p.sigma_bar, minimal_S(p, sig, margin),
                            active_bound(sig, tgt, p), tgt.g_p - sig.g))
    return rows


def gap_scan(sig: TameSignature, tgt: UserTargets, gaps: Iterable[float], variant: str = "full",
             margin: float = 1.0) -> list[ScanRow]:
    """S0 as a function of g' - g with the canonical eta."""
    rows = []
    for gap in gaps:
        t = replace(tgt, g_p=sig.g + float(gap))
        a, th, _ = _choose_alpha(sig, t, variant)
        eta = canonical_eta(sig, t, th)
        p = solve_params(sig, t, eta, variant)
        rows.append(ScanRow(eta, sig.g / eta, p.sigma_bar, minimal_S(p, sig, margin),
                            active_bound(sig, t, p), float(gap)))
    return rows


def piecewise_affine_fit(x: np.ndarray, y: np.ndarray, labels: list[str]) -> list[tuple[str, float, int]]:
    """Least-squares line per run of equal labels; returns (label, R^2, count).

    Pieces with fewer than three points are reported with R^2 = 1 when the
    line through them is exact.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    out = []
    start = 0
    for i in range(1, len(labels) + 1):
        if i == len(labels) or labels[i] != labels[start]:
            xs, ys = x[start:i], y[start:i]
            if len(xs) >= 2:
                A = np.vstack([xs, np.ones_like(xs)]).T
                coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
                resid = ys - A @ coef
                sst = float(np.sum((ys - ys.mean()) ** 2))
                r2 = 1.0 - float(np.sum(resid**2)) / sst if sst > 0 else 1.0
            else:
                r2 = 1.0
            out.append((labels[start], r2, len(xs)))
            start = i
    return out
