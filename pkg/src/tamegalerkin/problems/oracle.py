"""Brute-force reference solver on a fully truncated system."""

from __future__ import annotations

import numpy as np

from ..fourier_scale import ScaleFunction, cutoff_mask
from .base import ModelProblem

__all__ = ["oracle_dense_solve", "OracleUnavailable"]

MAX_COEFFICIENTS = 4096


class OracleUnavailable(RuntimeError):
    """Damped Newton did not reach the tolerance."""


def oracle_dense_solve(problem: ModelProblem, v: ScaleFunction, lam: float, eps: float,
                       tol: float = 1e-10, max_iter: int = 100) -> ScaleFunction:
    """Solve ``Pi(lam) F(u) = Pi(lam) v`` for ``u`` in ``E(lam)``.

    Damped Newton from 0 with the dense Jacobian; the damping halves the step
    until the l2 residual decreases.  ``tol`` bounds the l2 norm of the
    truncated residual.
    """
    mask = cutoff_mask(problem.grid, lam)
    n = int(mask.sum()) * problem.grid.components
    if n > MAX_COEFFICIENTS:
        raise ValueError(f"oracle block has {n} coefficients, above {MAX_COEFFICIENTS}")
    target = problem.to_flat(v, mask)

    def residual(x):
        return problem.to_flat(problem.evaluate(problem.from_flat(x, mask), eps), mask) - target

    x = np.zeros(n, dtype=complex)
    r = residual(x)
    for _ in range(max_iter):
        if np.linalg.norm(r) <= tol:
            return problem.from_flat(x, mask)
        J = problem.jacobian(problem.from_flat(x, mask), eps, mask, mask)
        try:
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as exc:
            raise OracleUnavailable(f"singular Jacobian: {exc}") from exc
        t = 1.0
        while t > 1e-8:
            xn = x + t * dx
            rn = residual(xn)
            if np.linalg.norm(rn) < np.linalg.norm(r):
                break
            t *= 0.5
        else:
            break
        x, r = xn, rn
    if np.linalg.norm(r) <= tol:
        return problem.from_flat(x, mask)
    raise OracleUnavailable(f"residual {np.linalg.norm(r):.3e} above tolerance")
