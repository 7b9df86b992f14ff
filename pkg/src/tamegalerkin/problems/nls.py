"""Semilinear Schrodinger system with a quasilinear first-order coupling.

    d_t u + i A(d_x) u = B(u, d_x) u,        u(0) = eps^kappa (a_eps, conj a_eps)

with ``u = (psi, conj psi)`` in C^{2n}, ``A = diag(lam, -lam) Laplacian`` and
``B`` built from first-order operators whose coefficients are homogeneous of
degree ``p`` in ``u``.  Initial data are concentrated, ``a_eps(x) = a_1(x/eps)``.

Everything is computed in the rescaled variable ``y = x/eps``: there
``eps d_x = d_y``, the eps-weighted Sobolev norm ``||(1 - eps^2 Lap_x)^{s/2} f||``
becomes the plain ``H^s_y`` norm times the volume factor ``eps^{d/2}``, and the
free evolution over ``t`` is the evolution over ``t / eps^2`` in ``y``.  The
periodic box in ``y`` stands in for the whole space.

The default coefficients are polynomials with unit coefficients built from
``beta(u) = sum_j u_j u_{n+j}`` (which equals ``|psi|^2`` on data of the form
``(psi, conj psi)``)::

    b_{k j j'}(u) = beta(u)^{p/2},     c_{k j j'}(u) = u_j u_{j'} beta(u)^{p/2 - 1}

and the conjugate blocks use the polynomial extension
``conj c_{k j j'} -> u_{n+j} u_{n+j'} beta^{p/2-1}``.  The ``b`` coefficients
are real on physical data and ``c`` is symmetric, so the transparency
conditions hold by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..fourier_scale import FrequencyGrid, NormSpec, ScaleFunction, norm
from ..param_solver import TameSignature
from ..surjection_solver import PreconditionError
from .base import ModelProblem

__all__ = [
    "NlsResidualProblem",
    "TransparencyReport",
    "ResidualScaling",
    "time_nodes",
    "differentiation_matrix",
]


def time_nodes(T: float, count: int, kind: str = "chebyshev") -> np.ndarray:
    """Sample times in ``[0, T]`` starting at ``t = 0``.

    ``chebyshev`` gives Chebyshev-Lobatto points, ``uniform`` equispaced ones.
    """
    if count < 2:
        raise ValueError("need at least two time nodes")
    j = np.arange(count)
    if kind == "chebyshev":
        return 0.5 * T * (1.0 - np.cos(np.pi * j / (count - 1)))
    if kind == "uniform":
        return T * j / (count - 1)
    raise ValueError(f"unknown node kind {kind!r}")


def differentiation_matrix(nodes: np.ndarray) -> np.ndarray:
    """Derivative of the polynomial interpolant through ``nodes``, evaluated at
    the nodes (barycentric form)."""
    t = np.asarray(nodes, float)
    diff = t[:, None] - t[None, :]
    np.fill_diagonal(diff, 1.0)
    w = 1.0 / np.prod(diff, axis=1)
    D = (w[None, :] / w[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


@dataclass(frozen=True)
class TransparencyReport:
    lambdas_distinct: bool
    b_diagonal_real: bool
    c_symmetric_on_resonant_pairs: bool
    resonant_pairs: tuple[tuple[int, int], ...]

    @property
    def ok(self) -> bool:
        return self.lambdas_distinct and self.b_diagonal_real and self.c_symmetric_on_resonant_pairs


@dataclass(frozen=True)
class ResidualScaling:
    eps: np.ndarray
    norms: np.ndarray
    slope: float
    predicted: float

    def rows(self) -> list[dict]:
        return [{"eps": float(e), "residual_norm": float(r)} for e, r in zip(self.eps, self.norms)]


class NlsResidualProblem(ModelProblem):
    """Residual of the free-evolution ansatz, and the functional around it.

    ``evaluate(w, eps)`` is ``Phi_eps(a_eps + w) - Phi_eps(a_eps)`` where
    ``Phi_eps(u) = (eps^2 d_t u + i A(eps d_x) u - eps B(u, eps d_x) u,
    u(0) - eps^kappa (a_eps, conj a_eps))``.  Space-time unknowns are stored as
    one :class:`ScaleFunction` whose components run over (time node, species
    component); ``d_t`` is the interpolation derivative on the time nodes.
    The output appends the ``2n`` components of the initial-value part.
    """

    name = "p2"

    def __init__(self, d: int = 2, N: int = 16, lambdas: Sequence[float] = (1.0, -1.0), p: int = 2,
                 kappa: float = 1.5, T: float = 1.0, nodes: int = 8, node_kind: str = "chebyshev",
                 amplitude: float = 0.1, profile_width: float = 1.5, seed: int = 0,
                 coupling: float = 1.0):
        if d not in (1, 2):
            raise ValueError("d must be 1 or 2")
        if p < 2 or p % 2:
            raise ValueError("p must be an even integer >= 2 for polynomial coefficients")
        if not kappa > d / (2.0 * (p - 1)):
            raise PreconditionError(f"kappa = {kappa} must exceed d/(2(p-1)) = {d / (2.0 * (p - 1)):.4g}")
        self.d, self.N, self.p, self.kappa, self.T = d, N, p, float(kappa), float(T)
        self.lambdas = np.asarray(lambdas, float)
        self.n = len(self.lambdas)
        self.coupling = float(coupling)
        self.t = time_nodes(T, nodes, node_kind)
        self.Dt = differentiation_matrix(self.t)
        self.space = FrequencyGrid(d, N, 2 * self.n)
        self.grid = FrequencyGrid(d, N, nodes * 2 * self.n)
        self.out_grid = FrequencyGrid(d, N, (nodes + 1) * 2 * self.n)
        self.signature = TameSignature(s0=d / 2 + 2.5, m=2.0, ell=2.0, ell_p=0.0, g=2.0)
        self.gamma = d * p / (2.0 * (p - 1))
        self._m = (p + 2) * N + 1  # padded transform size: products of degree p+1 stay alias free
        rng = np.random.default_rng(seed)
        k2 = self.space.k_squared()
        prof = np.exp(-k2 / (2.0 * profile_width**2))
        phases = np.exp(2j * np.pi * rng.random((self.n,) + k2.shape))
        self.a1 = amplitude * prof[None] * phases

    # -- transforms -----------------------------------------------------------
    def _idx(self):
        idx = np.arange(-self.N, self.N + 1) % self._m
        return np.ix_(*([idx] * self.d))

    def _phys(self, c: np.ndarray) -> np.ndarray:
        """Coefficients (..., W^d) to values on the padded grid."""
        m, d = self._m, self.d
        buf = np.zeros(c.shape[:-d] + (m,) * d, dtype=complex)
        buf[(Ellipsis,) + self._idx()] = c
        axes = tuple(range(-d, 0))
        return np.fft.ifftn(buf, axes=axes) * m**d

    def _coef(self, f: np.ndarray) -> np.ndarray:
        m, d = self._m, self.d
        spec = np.fft.fftn(f, axes=tuple(range(-d, 0))) / m**d
        return spec[(Ellipsis,) + self._idx()]

    def _grad_sum(self, c: np.ndarray) -> np.ndarray:
        """``sum_k d_{y_k}`` applied to coefficient arrays."""
        ks = self.space.wavenumbers()
        return c * (1j * sum(ks))

    # -- coefficients of B ------------------------------------------------------
    def _split(self, U: np.ndarray):
        ax = -(self.d + 1)
        n = self.n
        return np.take(U, range(n), axis=ax), np.take(U, range(n, 2 * n), axis=ax)

    def _dot(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Sum over the species axis, kept as a length-one axis."""
        return np.sum(X * Y, axis=-(self.d + 1), keepdims=True)

    def _B_apply(self, U: np.ndarray, W: np.ndarray, dU: np.ndarray | None = None) -> np.ndarray:
        """Physical values of ``B(U, d_y) W`` or, given ``dU``, of
        ``(D_U B [dU])(d_y) W``.  ``U`` and ``dU`` are physical values, ``W``
        holds coefficients."""
        q = self.p // 2
        Gu, Gl = self._split(self._phys(self._grad_sum(W)))
        Uu, Ul = self._split(U)
        beta = self._dot(Uu, Ul)
        pw = beta ** (q - 1)
        if dU is None:
            b = beta**q

            def c_dot(A, X):
                return pw * self._dot(A, X) * A
            upper = b * np.sum(Gu, axis=-(self.d + 1), keepdims=True) + c_dot(Uu, Gl)
            lower = c_dot(Ul, Gu) + b * np.sum(Gl, axis=-(self.d + 1), keepdims=True)
        else:
            dUu, dUl = self._split(dU)
            dbeta = self._dot(dUu, Ul) + self._dot(Uu, dUl)
            db = q * pw * dbeta
            dpw = (q - 1) * beta ** (q - 2) * dbeta if q > 1 else 0.0

            def c_dot(A, dA, X):
                s, ds = self._dot(A, X), self._dot(dA, X)
                return pw * (ds * A + s * dA) + dpw * s * A
            upper = db * np.sum(Gu, axis=-(self.d + 1), keepdims=True) + c_dot(Uu, dUu, Gl)
            lower = c_dot(Ul, dUl, Gu) + db * np.sum(Gl, axis=-(self.d + 1), keepdims=True)
        upper = np.broadcast_to(upper, Gu.shape)
        lower = np.broadcast_to(lower, Gl.shape)
        return self.coupling * np.concatenate([upper, lower], axis=-(self.d + 1))

    def B(self, u: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Coefficients of ``B(u, d_y) w`` for coefficient arrays of shape
        ``(..., 2n, W^d)``."""
        return self._coef(self._B_apply(self._phys(u), w))

    def dB(self, u: np.ndarray, h: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Coefficients of ``(D_u B [h])(d_y) w``."""
        return self._coef(self._B_apply(self._phys(u), w, self._phys(h)))

    # -- ansatz ---------------------------------------------------------------
    def _conj_coeffs(self, c: np.ndarray) -> np.ndarray:
        """Coefficients of the complex conjugate function."""
        flip = tuple(range(-self.d, 0))
        return np.conj(np.flip(c, axis=flip))

    def ansatz(self, eps: float, t: np.ndarray | None = None) -> list[ScaleFunction]:
        """Free evolution ``eps^kappa (exp(-itA) a_eps, conj)`` at the times ``t``
        (default: the problem's nodes), on the rescaled grid."""
        t = self.t if t is None else np.asarray(t, float)
        k2 = self.space.k_squared()
        out = []
        for tj in np.atleast_1d(t):
            phase = np.exp(1j * self.lambdas.reshape((-1,) + (1,) * self.d) * k2 * (tj / eps**2))
            up = eps**self.kappa * phase * self.a1
            out.append(ScaleFunction(self.space, np.concatenate([up, self._conj_coeffs(up)])))
        return out

    def ansatz_norm(self, eps: float, S: float) -> float:
        """``sup_t (||eps^2 d_t a||_{H_eps^{S-2}} + ||a||_{H_eps^S})`` over the nodes."""
        k2 = self.space.k_squared()
        lam = np.concatenate([self.lambdas, -self.lambdas])
        vol = eps ** (self.d / 2)
        best = 0.0
        for a in self.ansatz(eps):
            dt = a.like(a.coefficients * np.abs(lam).reshape((-1,) + (1,) * self.d) * k2)
            val = norm(dt, NormSpec("plain", S - 2)) + norm(a, NormSpec("plain", S))
            best = max(best, vol * val)
        return best

    def residual(self, eps: float) -> list[ScaleFunction]:
        """``-eps B(a_eps, eps d_x) a_eps`` at every node: the first part of
        ``Phi_eps(a_eps)``; the initial-value part vanishes exactly."""
        out = []
        for a in self.ansatz(eps):
            c = a.coefficients
            out.append(a.like(-eps * self.B(c, c)))
        return out

    def residual_norm(self, eps: float, s: float) -> float:
        """``|Phi_eps(a_eps)|'_s``: sup over nodes of the ``H_eps^s`` norm."""
        return eps ** (self.d / 2) * max(norm(r, NormSpec("plain", s)) for r in self.residual(eps))

    def predicted_exponent(self) -> float:
        return 1.0 + self.kappa * (self.p + 1) + self.d / 2.0

    def residual_scaling(self, eps_list: Sequence[float], s1: float) -> ResidualScaling:
        """Residual norms in ``|.|'_{s1-1}`` and the fitted log-log slope."""
        e = np.asarray(eps_list, float)
        r = np.array([self.residual_norm(x, s1 - 1.0) for x in e])
        slope = float(np.polyfit(np.log(e), np.log(r), 1)[0])
        return ResidualScaling(e, r, slope, self.predicted_exponent())

    # -- structure ---------------------------------------------------------------
    def transparency(self, rng: np.random.Generator | None = None, samples: int = 8) -> TransparencyReport:
        """Structural check of the transparency conditions on random physical
        data ``u = (psi, conj psi)``."""
        rng = rng or np.random.default_rng(0)
        lam = self.lambdas
        distinct = len(set(lam.tolist())) == len(lam)
        pairs = tuple((j, k) for j in range(self.n) for k in range(self.n) if lam[j] + lam[k] == 0.0)
        q = self.p // 2
        b_real = c_sym = True
        for _ in range(samples):
            psi = rng.normal(size=self.n) + 1j * rng.normal(size=self.n)
            beta = np.sum(psi * np.conj(psi))
            b = beta**q
            c = np.outer(psi, psi) * beta ** (q - 1)
            b_real &= abs(b.imag) <= 1e-12 * max(1.0, abs(b))
            c_sym &= all(abs(c[j, k] - c[k, j]) <= 1e-12 * max(1.0, abs(c[j, k])) for j, k in pairs)
        return TransparencyReport(distinct, bool(b_real), bool(c_sym), pairs)

    # -- the functional around the ansatz ---------------------------------------
    def _stack(self, u: ScaleFunction) -> np.ndarray:
        nodes = len(self.t)
        return u.coefficients.reshape((nodes, 2 * self.n) + (2 * self.N + 1,) * self.d)

    def _ansatz_stack(self, eps: float) -> np.ndarray:
        return np.stack([a.coefficients for a in self.ansatz(eps)])

    def _lin_symbol(self) -> np.ndarray:
        """Symbol of ``i A(eps d_x)`` on the rescaled grid."""
        lam = np.concatenate([self.lambdas, -self.lambdas]).reshape((-1,) + (1,) * self.d)
        return -1j * lam * self.space.k_squared()

    def phi(self, u: np.ndarray, eps: float) -> np.ndarray:
        """``Phi_eps`` on stacked coefficients of shape ``(nodes, 2n, W^d)``."""
        dt = np.tensordot(self.Dt, u, axes=(1, 0))
        first = eps**2 * dt + self._lin_symbol() * u - eps * self.B(u, u)
        init = u[0] - self._ansatz_stack(eps)[0]
        return np.concatenate([first, init[None]])

    def _out(self, x: np.ndarray) -> ScaleFunction:
        return ScaleFunction(self.out_grid, x.reshape(self.out_grid.shape))

    def evaluate(self, u: ScaleFunction, eps: float) -> ScaleFunction:
        a = self._ansatz_stack(eps)
        return self._out(self.phi(a + self._stack(u), eps) - self.phi(a, eps))

    def apply_d(self, u: ScaleFunction, h: ScaleFunction, eps: float) -> ScaleFunction:
        U = self._ansatz_stack(eps) + self._stack(u)
        H = self._stack(h)
        dt = np.tensordot(self.Dt, H, axes=(1, 0))
        first = eps**2 * dt + self._lin_symbol() * H - eps * (self.B(U, H) + self.dB(U, H, U))
        return self._out(np.concatenate([first, H[0][None]]))

    def space_time_norm(self, x: ScaleFunction, s: float, eps: float) -> float:
        """Sup over time slots of the ``H_eps^s`` norm (volume factor included)."""
        c = x.coefficients.reshape((-1, 2 * self.n) + (2 * self.N + 1,) * self.d)
        vol = eps ** (self.d / 2)
        return vol * max(norm(ScaleFunction(self.space, ci), NormSpec("plain", s)) for ci in c)
