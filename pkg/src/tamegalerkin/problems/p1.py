"""A small-divisor model with a transport nonlinearity.

    F_eps(u) = A_eps u + mu d/dx (u^2),      A_eps = eps^g <D>^{-l'}

on the one-dimensional torus.  The linear part is diagonal with inverse
symbol eps^{-g} <k>^{l'}, so the inverse at u = 0 meets the tame inverse
estimate with equality on single modes, while the quadratic term costs one
derivative (m = 1).
"""

from __future__ import annotations

import numpy as np

from ..fourier_scale import FrequencyGrid, ScaleFunction, derivative, multiplier, product
from ..param_solver import TameSignature
from .base import ModelProblem

__all__ = ["SmallDivisorProblem"]


class SmallDivisorProblem(ModelProblem):
    name = "p1"

    def __init__(self, N: int = 16, g: float = 1.0, mu: float = 1.0, ell_p: float = 1.0,
                 s0: float = 1.0, real: bool = False, inverse: str = "frozen"):
        if inverse not in ("exact", "frozen"):
            raise ValueError("inverse must be 'exact' or 'frozen'")
        self.grid = FrequencyGrid(1, N)
        self.g = float(g)
        self.mu = float(mu)
        self.ell_p = float(ell_p)
        self.real = real
        self.inverse = inverse
        self.signature = TameSignature(s0=s0, m=1.0, ell=1.0, ell_p=self.ell_p, g=self.g)
        self._k = self.grid.axis_modes().astype(float)

    # symbols ---------------------------------------------------------------
    def symbol(self, eps: float) -> np.ndarray:
        return eps**self.g * (1.0 + self._k**2) ** (-0.5 * self.ell_p)

    def inverse_symbol(self, eps: float) -> np.ndarray:
        return eps ** (-self.g) * (1.0 + self._k**2) ** (0.5 * self.ell_p)

    def _wrap(self, u: ScaleFunction) -> ScaleFunction:
        return u if u.real == self.real else ScaleFunction(self.grid, u.coefficients, u.epsilon, self.real)

    # map -------------------------------------------------------------------
    def linear(self, u: ScaleFunction, eps: float) -> ScaleFunction:
        return multiplier(u, self.symbol(eps)[None, :])

    def evaluate(self, u: ScaleFunction, eps: float) -> ScaleFunction:
        return self.linear(u, eps) + self.mu * derivative(product(u, u))

    def apply_d(self, u: ScaleFunction, h: ScaleFunction, eps: float) -> ScaleFunction:
        return self.linear(h, eps) + (2.0 * self.mu) * derivative(product(u, h))

    def increment(self, u: ScaleFunction, z: ScaleFunction, eps: float) -> ScaleFunction:
        return self.linear(z, eps) + self.mu * derivative(product(2.0 * u + z, z))

    def right_inverse_at_zero(self, k: ScaleFunction, eps: float) -> ScaleFunction:
        """Symbol eps^{-g} <k>^{l'}: the exact inverse of DF(0)."""
        return multiplier(k, self.inverse_symbol(eps)[None, :])

    # dense forms -----------------------------------------------------------
    def jacobian(self, u: ScaleFunction, eps: float, rows=None, cols=None) -> np.ndarray:
        N = self.grid.N
        c = u.coefficients[0]
        kk = np.arange(-N, N + 1)
        diff = kk[:, None] - kk[None, :]
        inside = np.abs(diff) <= N
        conv = np.where(inside, c[np.clip(diff + N, 0, 2 * N)], 0.0)
        J = (2.0 * self.mu) * (1j * kk[:, None]) * conv
        J[np.diag_indices(2 * N + 1)] += self.symbol(eps)
        if rows is not None:
            J = J[rows.reshape(-1), :]
        if cols is not None:
            J = J[:, cols.reshape(-1)]
        return J

    def right_inverse_matrix(self, u: ScaleFunction, eps: float) -> np.ndarray:
        if self.inverse == "frozen":
            return np.diag(self.inverse_symbol(eps)).astype(complex)
        return np.linalg.inv(self.jacobian(u, eps))
