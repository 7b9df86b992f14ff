"""The contract every model problem implements."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..fourier_scale import FrequencyGrid, ScaleFunction
from ..param_solver import TameSignature

__all__ = ["ModelProblem", "gateaux_check", "GateauxReport"]


class ModelProblem:
    """A family ``F_eps`` of maps on a Fourier grid with ``F_eps(0) = 0``.

    Subclasses provide ``evaluate`` and ``apply_d``.  The dense helpers assemble
    matrices column by column from ``apply_d`` and can be overridden when a
    closed form is cheaper.  Block matrices act on the coefficients selected by
    boolean spatial masks, flattened in row-major frequency order.
    """

    signature: TameSignature
    grid: FrequencyGrid
    real: bool = False
    name: str = "problem"

    # -- required -----------------------------------------------------------
    def evaluate(self, u: ScaleFunction, eps: float) -> ScaleFunction:
        raise NotImplementedError

    def apply_d(self, u: ScaleFunction, h: ScaleFunction, eps: float) -> ScaleFunction:
        raise NotImplementedError

    # -- optional -----------------------------------------------------------
    def increment(self, u: ScaleFunction, z: ScaleFunction, eps: float) -> ScaleFunction:
        """``F(u + z) - F(u)``; override with a cancellation-free form."""
        return self.evaluate(u + z, eps) - self.evaluate(u, eps)

    def zero(self) -> ScaleFunction:
        return ScaleFunction.zeros(self.grid)

    def from_flat(self, x: np.ndarray, mask: np.ndarray | None = None) -> ScaleFunction:
        c = np.zeros(self.grid.shape, dtype=complex)
        if mask is None:
            c.reshape(-1)[:] = x
        else:
            c[:, mask] = np.asarray(x).reshape(self.grid.components, -1)
        return ScaleFunction(self.grid, c)

    def to_flat(self, u: ScaleFunction, mask: np.ndarray | None = None) -> np.ndarray:
        if mask is None:
            return u.coefficients.reshape(-1).copy()
        return u.coefficients[:, mask].reshape(-1).copy()

    def full_mask(self) -> np.ndarray:
        return np.ones(self.grid.shape[1:], dtype=bool)

    def jacobian(self, u: ScaleFunction, eps: float, rows: np.ndarray | None = None,
                 cols: np.ndarray | None = None) -> np.ndarray:
        """Dense ``Pi_rows DF(u) |_cols`` assembled from ``apply_d``."""
        rows = self.full_mask() if rows is None else rows
        cols = self.full_mask() if cols is None else cols
        ncol = int(cols.sum()) * self.grid.components
        out = np.empty((int(rows.sum()) * self.grid.components, ncol), dtype=complex)
        for j in range(ncol):
            e = np.zeros(ncol, dtype=complex)
            e[j] = 1.0
            out[:, j] = self.to_flat(self.apply_d(u, self.from_flat(e, cols), eps), rows)
        return out

    def right_inverse_matrix(self, u: ScaleFunction, eps: float) -> np.ndarray:
        """Dense approximate right inverse ``L_eps(u)`` on the whole grid.

        The default inverts the full-grid differential at ``u``.
        """
        return np.linalg.inv(self.jacobian(u, eps))

    def right_inverse(self, u: ScaleFunction, eps: float) -> Callable[[ScaleFunction], ScaleFunction]:
        mat = self.right_inverse_matrix(u, eps)
        return lambda k: self.from_flat(mat @ self.to_flat(k))


@dataclass(frozen=True)
class GateauxReport:
    steps: np.ndarray
    errors: np.ndarray
    slope: float

    @property
    def first_order(self) -> bool:
        return 0.9 <= self.slope <= 1.1


def gateaux_check(F: Callable[[ScaleFunction], ScaleFunction],
                  dF: Callable[[ScaleFunction], ScaleFunction],
                  u: ScaleFunction, h: ScaleFunction, norm: Callable[[ScaleFunction], float],
                  steps=(1e-3, 1e-4, 1e-5)) -> GateauxReport:
    """Error of the one-sided difference quotient against ``dF(u) h``.

    The slope of log error against log step is 1 for a map whose second
    derivative does not vanish along ``h``.
    """
    base = F(u)
    exact = dF(h)
    errs = []
    for t in steps:
        fd = (F(u + t * h) - base) * (1.0 / t)
        errs.append(norm(fd - exact))
    steps = np.asarray(steps, float)
    errs = np.asarray(errs, float)
    slope = float(np.polyfit(np.log(steps), np.log(errs), 1)[0])
    return GateauxReport(steps, errs, slope)
