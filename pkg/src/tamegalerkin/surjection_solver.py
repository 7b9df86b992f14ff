"""Local surjection on a finite Galerkin block.

Given a nonlinear block map ``f`` with ``f(0) = 0`` whose differential has a
right inverse ``T(u)`` of bounded norm on a ball, ``solve_local`` finds ``u`` in
the ball with ``f(u) = v``.  The right inverse is built from an approximate
right inverse ``L`` by the Neumann series ``T = L sum_i (I - Df L)^i`` and the
solve itself is a continuation along the path ``t -> t v`` with a right-inverse
corrector.  ``newton_baseline`` is the classical iteration without any ball
control, kept for comparison.

Block vectors are flat complex numpy arrays.  Norms are either
:class:`WeightedNorm` instances (sums of weighted l2 norms, which admit an
inner-product surrogate) or arbitrary callables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "BlockOperator",
    "WeightedNorm",
    "NeumannInverse",
    "SolveReport",
    "ContractionError",
    "PreconditionError",
    "BallViolation",
    "operator_norm",
    "contraction_factor",
    "neumann_terms",
    "neumann_right_inverse",
    "solve_local",
    "newton_baseline",
]

Norm = Callable[[np.ndarray], float]


class ContractionError(RuntimeError):
    """``I - Df L`` is not a contraction; the block cutoff is too small."""

    def __init__(self, q: float, q_max: float):
        super().__init__(f"contraction factor {q:.4g} exceeds {q_max:.4g}")
        self.q = q
        self.q_max = q_max


class PreconditionError(ValueError):
    """The target lies outside the certified ball ``radius / M``."""


class BallViolation(AssertionError):
    """An accepted iterate left the prescribed ball."""


# ---------------------------------------------------------------------------
# operators and norms
# ---------------------------------------------------------------------------


@dataclass
class BlockOperator:
    """Linear map between block coordinate vectors.

    ``matrix`` is optional; when present it is used for products and for
    operator-norm estimates.
    """

    apply: Callable[[np.ndarray], np.ndarray]
    n_in: int
    n_out: int
    matrix: np.ndarray | None = None
    name: str = ""

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.apply(x)

    @classmethod
    def from_matrix(cls, M: np.ndarray, name: str = "") -> "BlockOperator":
        M = np.asarray(M)
        return cls(lambda x: M @ x, M.shape[1], M.shape[0], M, name)

    @classmethod
    def identity(cls, n: int) -> "BlockOperator":
        return cls.from_matrix(np.eye(n, dtype=complex), "I")

    def compose(self, other: "BlockOperator") -> "BlockOperator":
        """``self o other``."""
        if other.n_out != self.n_in:
            raise ValueError("block dimensions do not match")
        if self.matrix is not None and other.matrix is not None:
            return BlockOperator.from_matrix(self.matrix @ other.matrix, f"{self.name}{other.name}")
        return BlockOperator(lambda x: self.apply(other.apply(x)), other.n_in, self.n_out)

    def check_linearity(self, rng: np.random.Generator, rtol: float = 1e-10, trials: int = 3) -> bool:
        for _ in range(trials):
            x = rng.standard_normal(self.n_in) + 1j * rng.standard_normal(self.n_in)
            y = rng.standard_normal(self.n_in) + 1j * rng.standard_normal(self.n_in)
            lhs = self.apply(x + y)
            rhs = self.apply(x) + self.apply(y)
            if np.linalg.norm(lhs - rhs) > rtol * max(np.linalg.norm(lhs), np.linalg.norm(rhs), 1e-300):
                return False
        return True


@dataclass(frozen=True)
class WeightedNorm:
    """``N(x) = sum_i ( sum_j exp(2 log_weights[i][j]) |x_j|^2 )^{1/2}``.

    The inner-product surrogate ``H(x)^2 = sum_i ||x||_i^2`` satisfies
    ``H <= N <= sqrt(p) H`` with ``p`` the number of terms.
    """

    log_weights: tuple[np.ndarray, ...]

    def __call__(self, x: np.ndarray) -> float:
        return float(sum(_wnorm(x, lw) for lw in self.log_weights))

    @property
    def terms(self) -> int:
        return len(self.log_weights)

    def hilbert_log_weight(self) -> np.ndarray:
        lws = np.vstack(self.log_weights)
        top = lws.max(axis=0)
        return top + 0.5 * np.log(np.sum(np.exp(2.0 * (lws - top)), axis=0))

    @classmethod
    def sobolev(cls, brackets: np.ndarray, s: float) -> "WeightedNorm":
        return cls((s * np.log(brackets),))


def _wnorm(x: np.ndarray, lw: np.ndarray) -> float:
    mag = np.abs(x)
    nz = mag > 0
    if not np.any(nz):
        return 0.0
    logs = np.log(mag[nz]) + lw[nz]
    top = float(np.max(logs))
    return float(np.exp(top) * np.sqrt(np.sum(np.exp(2.0 * (logs - top)))))


def _random_vector(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def operator_norm(A: BlockOperator, norm_in: Norm, norm_out: Norm | None = None, *,
                  iterations: int = 20, restarts: int = 5, rng: np.random.Generator | None = None) -> float:
    """Randomized power-iteration estimate of ``sup ||A x||_out / ||x||_in``.

    With weighted norms and a dense matrix, the estimate is the largest
    singular value of the rescaled matrix (the inner-product surrogate)
    multiplied by ``sqrt(p_in)``, which bounds the norm ratio from above up
    to the power-iteration error.  Otherwise it is the largest ratio seen
    along plain power iterations.
    """
    norm_out = norm_out or norm_in
    rng = rng or np.random.default_rng(0)
    if A.n_in == 0 or A.n_out == 0:
        return 0.0
    if A.matrix is not None and isinstance(norm_in, WeightedNorm) and isinstance(norm_out, WeightedNorm):
        return _weighted_matrix_norm(A.matrix, norm_in, norm_out, iterations, restarts, rng)
    best = 0.0
    for _ in range(restarts):
        x = _random_vector(rng, A.n_in)
        for _ in range(iterations):
            nx = norm_in(x)
            if nx == 0.0:
                break
            y = A(x)
            ratio = norm_out(y) / nx
            best = max(best, ratio)
            if ratio == 0.0 or A.n_in != A.n_out:
                break
            x = y / max(np.max(np.abs(y)), 1e-300)
    return best


def _weighted_matrix_norm(M: np.ndarray, norm_in: WeightedNorm, norm_out: WeightedNorm,
                          iterations: int, restarts: int, rng: np.random.Generator) -> float:
    win = norm_in.hilbert_log_weight()
    wout = norm_out.hilbert_log_weight()
    # B = D_out M D_in^{-1}, with the exponentials combined to avoid overflow
    B = M * np.exp(wout[:, None] - win[None, :])
    B = np.where(np.isfinite(B), B, 0.0)
    best = 0.0
    for _ in range(restarts):
        x = _random_vector(rng, M.shape[1])
        x /= np.linalg.norm(x)
        sigma = 0.0
        for _ in range(iterations):
            y = B @ x
            sigma = np.linalg.norm(y)
            if sigma == 0.0:
                break
            x = B.conj().T @ y
            nx = np.linalg.norm(x)
            if nx == 0.0:
                break
            x /= nx
        best = max(best, float(sigma))
    return best * math.sqrt(norm_in.terms)


def contraction_factor(Df: BlockOperator, L: BlockOperator, norm_N: Norm, probes: int = 5,
                       rng: np.random.Generator | None = None) -> float:
    """Estimated norm of ``I - Df L`` on the range block."""
    R = _residual_operator(Df, L)
    return operator_norm(R, norm_N, norm_N, restarts=probes, rng=rng)


def _residual_operator(Df: BlockOperator, L: BlockOperator) -> BlockOperator:
    if Df.matrix is not None and L.matrix is not None:
        return BlockOperator.from_matrix(np.eye(Df.n_out, dtype=complex) - Df.matrix @ L.matrix, "I-DfL")
    return BlockOperator(lambda k: k - Df(L(k)), Df.n_out, Df.n_out, name="I-DfL")


def neumann_terms(q: float, term_tol: float) -> int:
    """Smallest ``I >= 0`` with ``q^{I+1} / (1 - q) <= term_tol``."""
    if q <= 0.0:
        return 0
    if q >= 1.0:
        raise ValueError("Neumann series needs q < 1")
    I = math.ceil(math.log(term_tol * (1.0 - q)) / math.log(q) - 1.0)
    return max(I, 0)


@dataclass
class NeumannInverse:
    """Right inverse ``T = L S`` with ``S = sum_{i <= terms} (I - Df L)^i``."""

    L: BlockOperator
    terms: int
    q: float
    T: BlockOperator
    L_norm: float = float("nan")
    T_norm: float = float("nan")
    probe_residual: float = float("nan")

    def __call__(self, k: np.ndarray) -> np.ndarray:
        return self.T(k)


def neumann_right_inverse(Df: BlockOperator, L: BlockOperator, norm_N: Norm, q_max: float = 0.5,
                          term_tol: float = 1e-10, *, norm_dom: Norm | None = None, probes: int = 20,
                          rng: np.random.Generator | None = None, measure_norms: bool = True) -> NeumannInverse:
    """Build ``T`` and check ``||Df T k - k|| <= 2 term_tol ||k||`` on probes.

    ``norm_N`` is the norm on the range block and ``norm_dom`` the norm on the
    domain block (defaults to ``norm_N``).  Raises :class:`ContractionError`
    when the measured contraction exceeds ``q_max``.
    """
    rng = rng or np.random.default_rng(0)
    norm_dom = norm_dom or norm_N
    q = contraction_factor(Df, L, norm_N, rng=rng)
    if q > q_max:
        raise ContractionError(q, q_max)
    I = neumann_terms(q, term_tol)
    R = _residual_operator(Df, L)
    if R.matrix is not None and L.matrix is not None:
        S = np.eye(Df.n_out, dtype=complex)
        for _ in range(I):
            S = np.eye(Df.n_out, dtype=complex) + R.matrix @ S
        T = BlockOperator.from_matrix(L.matrix @ S, "T")
    else:
        def apply_T(k):
            acc = k.copy()
            term = k
            for _ in range(I):
                term = R(term)
                acc = acc + term
            return L(acc)
        T = BlockOperator(apply_T, Df.n_out, L.n_out, name="T")
    worst = 0.0
    for _ in range(probes):
        k = _random_vector(rng, Df.n_out)
        nk = norm_N(k)
        worst = max(worst, norm_N(Df(T(k)) - k) / nk)
    inv = NeumannInverse(L=L, terms=I, q=q, T=T, probe_residual=worst)
    if measure_norms:
        inv.L_norm = operator_norm(L, norm_N, norm_dom, rng=rng)
        inv.T_norm = operator_norm(T, norm_N, norm_dom, rng=rng)
    return inv


# ---------------------------------------------------------------------------
# nonlinear solves
# ---------------------------------------------------------------------------


@dataclass
class SolveReport:
    solution: np.ndarray
    iterations: int
    residual: float
    max_ball_norm: float
    success: bool
    reason: str = ""
    M_est: float = float("nan")
    t_reached: float = 0.0
    history: list = field(default_factory=list)


def solve_local(f: Callable[[np.ndarray], np.ndarray], v: np.ndarray,
                T_at: Callable[[np.ndarray | None], NeumannInverse], radius: float, norm_N: Norm, *,
                norm_out: Norm | None = None, tol: float = 1e-10, budget: int = 200,
                enforce_precondition: bool = True, initial_step: float = 0.125,
                min_step: float = 2.0**-20, corrector_steps: int = 8, path_rtol: float = 1e-3) -> SolveReport:
    """Continuation along ``t v`` with right-inverse corrections.

    ``T_at(u)`` returns the right inverse at the base point ``u`` (``None``
    stands for the origin).  ``norm_N`` measures unknowns and defines the
    ball, ``norm_out`` measures targets and residuals (defaults to
    ``norm_N``).  Intermediate path points are accepted once the residual is
    below ``path_rtol ||v||``; the end point needs ``tol``.  A path step is
    retried at half length whenever a correction fails to reduce the residual
    or would leave the ball; the length doubles after two consecutive
    accepted steps.  ``M_est`` is the largest ``||T||`` over all base points
    visited.
    """
    norm_out = norm_out or norm_N
    v = np.asarray(v, dtype=complex)
    nv = norm_out(v)
    inv0 = T_at(None)
    n_dom = inv0.T.n_out
    M = inv0.T_norm
    if nv == 0.0:
        return SolveReport(np.zeros(n_dom, complex), 0, 0.0, 0.0, True, "zero target", M, 1.0)
    if enforce_precondition and nv > radius / M:
        raise PreconditionError(f"target norm {nv:.4g} exceeds radius/M = {radius / M:.4g}")
    u = np.zeros(n_dom, dtype=complex)
    fu = np.zeros_like(v)
    inv_u = inv0
    t, h = 0.0, min(initial_step, 1.0)
    streak = iters = 0
    ball = 0.0
    history = []
    while t < 1.0:
        t_new = min(1.0, t + h)
        goal = t_new * v
        target_tol = tol if t_new >= 1.0 else max(tol, path_rtol * nv)
        ut, fut, inv_t = u, fu, inv_u
        rt = goal - fut
        res = norm_out(rt)
        ok = res <= target_tol
        for _ in range(corrector_steps):
            if ok:
                break
            if iters >= budget:
                return SolveReport(u, iters, norm_out(t * v - fu), ball, False, "budget", M, t, history)
            iters += 1
            un = ut + inv_t(rt)
            nu = norm_N(un)
            if not np.isfinite(nu) or nu > radius:
                break
            fn = f(un)
            rn = goal - fn
            resn = norm_out(rn)
            if not resn < res:
                break
            ut, fut, rt, res = un, fn, rn, resn
            ball = max(ball, nu)
            ok = res <= target_tol
            if not ok:
                inv_t = T_at(ut)
                M = max(M, inv_t.T_norm)
        history.append((t_new, res, ok))
        if ok:
            if norm_N(ut) > radius:
                raise BallViolation("accepted iterate outside the ball")
            if ut is not u and t_new < 1.0:
                inv_u = inv_t if inv_t is not inv_u else T_at(ut)
                M = max(M, inv_u.T_norm)
            u, fu, t = ut, fut, t_new
            streak += 1
            if streak >= 2:
                h *= 2.0
                streak = 0
        else:
            streak = 0
            h *= 0.5
            if h < min_step:
                return SolveReport(u, iters, norm_out(t * v - fu), ball, False, "step underflow", M, t, history)
    residual = norm_out(v - fu)
    nu = norm_N(u)
    if nu > M * nv + 1e-8:
        return SolveReport(u, iters, residual, ball, False, "solution bound", M, t, history)
    ok = residual <= tol
    return SolveReport(u, iters, residual, ball, ok, "" if ok else "tolerance", M, t, history)


def newton_baseline(F: Callable[[np.ndarray], np.ndarray], L_at: Callable[[np.ndarray], Callable],
                    v: np.ndarray, eps: float, radius: float, norm: Norm, *, tol: float = 1e-10,
                    budget: int = 50, norm_out: Norm | None = None, x0: np.ndarray | None = None) -> SolveReport:
    """Classical iteration ``u <- u - L(u)(F(u) - v)`` from 0.

    Fails when the iterate leaves the ball of ``radius``, becomes non-finite or
    the budget runs out.  ``eps`` is recorded for reporting only; the
    singular scaling is carried by ``F`` and ``L_at``.
    """
    norm_out = norm_out or norm
    v = np.asarray(v, dtype=complex)
    u = np.zeros_like(v) if x0 is None else np.asarray(x0, dtype=complex).copy()
    r = F(u) - v
    res = norm_out(r)
    ball = norm(u)
    history = [res]
    for it in range(budget + 1):
        if res <= tol:
            return SolveReport(u, it, res, ball, True, "", float("nan"), 1.0, history)
        if it == budget:
            break
        u = u - L_at(u)(r)
        nu = norm(u)
        if not np.isfinite(nu):
            return SolveReport(u, it + 1, float("inf"), ball, False, "diverged", float("nan"), 0.0, history)
        ball = max(ball, nu)
        if nu > radius:
            return SolveReport(u, it + 1, res, ball, False, "left ball", float("nan"), 0.0, history)
        r = F(u) - v
        res = norm_out(r)
        history.append(res)
    return SolveReport(u, budget, res, ball, False, "budget", float("nan"), 0.0, history)
