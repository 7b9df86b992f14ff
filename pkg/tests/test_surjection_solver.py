import numpy as np
import pytest

from tamegalerkin.fourier_scale import cutoff_mask, random_function
from tamegalerkin.problems import SmallDivisorProblem, oracle_dense_solve
from tamegalerkin.surjection_solver import (
    BallViolation,
    BlockOperator,
    ContractionError,
    PreconditionError,
    WeightedNorm,
    contraction_factor,
    neumann_right_inverse,
    neumann_terms,
    newton_baseline,
    operator_norm,
    solve_local,
)


# Ball radius in the s=1 norm on which the frozen inverse contracts with
# q <= 1/5 for the Lambda=8, eps=0.5 block (the inverse loses two derivatives).
RADIUS = 1e-3


def sup_norm(x):
    return float(np.max(np.abs(x)))


def l2_norm(x):
    return float(np.linalg.norm(x))


class P1Block:
    """The P1 map restricted to the cutoff block of ``lam``."""

    def __init__(self, lam=8.0, eps=0.5, N=16, s=1.0):
        self.problem = SmallDivisorProblem(N=N)
        self.eps = eps
        self.lam = lam
        self.mask = cutoff_mask(self.problem.grid, lam)
        self.norm = WeightedNorm.sobolev(self.problem.grid.bracket()[self.mask], s)
        self.n = int(self.mask.sum())
        self.L = BlockOperator.from_matrix(np.diag(self.problem.inverse_symbol(eps)[self.mask]).astype(complex))

    def u(self, x):
        return self.problem.from_flat(x, self.mask)

    def f(self, x):
        p = self.problem
        return p.to_flat(p.evaluate(self.u(x), self.eps), self.mask)

    def Df(self, x):
        J = self.problem.jacobian(self.u(x), self.eps, self.mask, self.mask)
        return BlockOperator.from_matrix(J)

    def T_at(self, x, term_tol=1e-10):
        x = np.zeros(self.n, complex) if x is None else x
        return neumann_right_inverse(self.Df(x), self.L, self.norm, term_tol=term_tol)


# -- BlockOperator ---------------------------------------------------------


def test_block_operator_linearity(rng):
    A = BlockOperator.from_matrix(rng.standard_normal((6, 4)))
    assert A.check_linearity(rng)
    bad = BlockOperator(lambda x: x**2, 3, 3)
    assert not bad.check_linearity(rng)


def test_compose_dimensions(rng):
    A = BlockOperator.from_matrix(rng.standard_normal((3, 4)))
    B = BlockOperator.from_matrix(rng.standard_normal((4, 5)))
    C = A.compose(B)
    x = rng.standard_normal(5)
    np.testing.assert_allclose(C(x), A(B(x)))
    with pytest.raises(ValueError):
        B.compose(B)


# -- contraction_factor ----------------------------------------------------


def test_contraction_zero_for_exact_inverse(rng):
    M = rng.standard_normal((5, 5)) + 5 * np.eye(5)
    Df = BlockOperator.from_matrix(M)
    L = BlockOperator.from_matrix(np.linalg.inv(M))
    assert contraction_factor(Df, L, l2_norm) < 1e-12


def test_contraction_doubled_identity_sup_norm():
    Df = BlockOperator.from_matrix(2 * np.eye(5))
    L = BlockOperator.identity(5)
    assert contraction_factor(Df, L, sup_norm) == pytest.approx(1.0)


def test_contraction_zero_for_p1_at_origin():
    blk = P1Block()
    assert contraction_factor(blk.Df(np.zeros(blk.n, complex)), blk.L, blk.norm) < 1e-12


def test_contraction_matrix_free_path(rng):
    M = rng.standard_normal((5, 5)) + 5 * np.eye(5)
    Df = BlockOperator(lambda x: M @ x, 5, 5)
    L = BlockOperator(lambda x: np.linalg.solve(M, x), 5, 5)
    assert contraction_factor(Df, L, l2_norm) < 1e-12


# -- neumann_right_inverse -------------------------------------------------


@pytest.mark.parametrize(
    "q, term_tol, expected",
    [(0.0, 1e-10, 0), (0.5, 1e-8, 26), (0.25, 1e-10, 16)],
)
def test_neumann_term_count(q, term_tol, expected):
    I = neumann_terms(q, term_tol)
    assert I >= expected
    if q > 0:
        assert q ** (I + 1) / (1 - q) <= term_tol
        assert q**I / (1 - q) > term_tol


def test_exact_inverse_collapses_series(rng):
    M = rng.standard_normal((4, 4)) + 4 * np.eye(4)
    inv = neumann_right_inverse(BlockOperator.from_matrix(M), BlockOperator.from_matrix(np.linalg.inv(M)), l2_norm)
    assert inv.terms == 0
    np.testing.assert_allclose(inv.T.matrix, np.linalg.inv(M), atol=1e-12)


def test_contraction_failure_raises():
    Df = BlockOperator.from_matrix(2 * np.eye(3))
    with pytest.raises(ContractionError):
        neumann_right_inverse(Df, BlockOperator.identity(3), sup_norm)


def test_p1_neumann_inverse_at_small_base_point(rng):
    blk = P1Block()
    base = blk.problem.to_flat(random_function(blk.problem.grid, rng, decay=2.0), blk.mask)
    base *= 0.5 * RADIUS / blk.norm(base)
    inv = blk.T_at(base, term_tol=1e-8)
    assert 0 < inv.q <= 0.5
    Df = blk.Df(base)
    for _ in range(20):
        k = rng.standard_normal(blk.n) + 1j * rng.standard_normal(blk.n)
        assert blk.norm(Df(inv(k)) - k) <= 2e-8 * blk.norm(k)
    assert inv.probe_residual <= 2e-8


def test_norm_of_T_at_most_twice_L(rng):
    blk = P1Block()
    base = blk.problem.to_flat(random_function(blk.problem.grid, rng, decay=2.0), blk.mask)
    base *= RADIUS / blk.norm(base)
    inv = blk.T_at(base)
    assert inv.q <= 0.5
    assert inv.T_norm <= 2 * inv.L_norm * 1.05


def test_operator_norm_diagonal_weighted():
    w = WeightedNorm((np.zeros(3),))
    A = BlockOperator.from_matrix(np.diag([1.0, 3.0, 2.0]).astype(complex))
    assert operator_norm(A, w) == pytest.approx(3.0, rel=1e-6)


# -- solve_local -----------------------------------------------------------


def test_linear_map_single_step(rng):
    M = rng.standard_normal((4, 4)) + 4 * np.eye(4)
    Minv = np.linalg.inv(M)

    def T_at(_):
        return neumann_right_inverse(BlockOperator.from_matrix(M), BlockOperator.from_matrix(Minv), l2_norm)

    v = 1e-3 * rng.standard_normal(4)
    rep = solve_local(lambda x: M @ x, v, T_at, radius=1.0, norm_N=l2_norm, initial_step=1.0)
    assert rep.success
    assert rep.iterations == 1
    np.testing.assert_allclose(rep.solution, Minv @ v, atol=1e-12)


def test_zero_target_zero_iterations():
    blk = P1Block()
    rep = solve_local(blk.f, np.zeros(blk.n, complex), blk.T_at, radius=1.0, norm_N=blk.norm)
    assert rep.success and rep.iterations == 0
    assert not np.any(rep.solution)


def test_precondition_enforced(rng):
    blk = P1Block()
    M = blk.T_at(None).T_norm
    v = rng.standard_normal(blk.n) + 0j
    v *= 2.0 / (M * blk.norm(v))
    with pytest.raises(PreconditionError):
        solve_local(blk.f, v, blk.T_at, radius=1.0, norm_N=blk.norm)


def test_p1_block_solve_matches_oracle(rng):
    blk = P1Block(lam=8.0, eps=0.5)
    M = blk.T_at(None).T_norm
    radius = RADIUS
    v = blk.problem.to_flat(random_function(blk.problem.grid, rng, decay=2.0), blk.mask)
    v *= 0.1 * radius / (M * blk.norm(v))
    rep = solve_local(blk.f, v, blk.T_at, radius, blk.norm, tol=1e-11)
    assert rep.success, rep.reason
    assert blk.norm(blk.f(rep.solution) - v) <= 1e-9
    assert rep.max_ball_norm <= radius
    assert blk.norm(rep.solution) <= rep.M_est * blk.norm(v) + 1e-8
    ref = oracle_dense_solve(blk.problem, blk.u(v), blk.lam, blk.eps, tol=1e-13)
    ref_flat = blk.problem.to_flat(ref, blk.mask)
    assert blk.norm(ref_flat - rep.solution) <= 1e-6 * blk.norm(ref_flat)


def test_budget_exhaustion_is_reported(rng):
    blk = P1Block()
    M = blk.T_at(None).T_norm
    v = blk.problem.to_flat(random_function(blk.problem.grid, rng, decay=2.0), blk.mask)
    v *= 0.5 * RADIUS / (M * blk.norm(v))
    rep = solve_local(blk.f, v, blk.T_at, RADIUS, blk.norm, budget=1)
    assert not rep.success
    assert rep.reason == "budget"


def test_ball_violation_type_is_assertion():
    assert issubclass(BallViolation, AssertionError)


# -- newton_baseline -------------------------------------------------------


def test_newton_linear_one_step(rng):
    M = rng.standard_normal((4, 4)) + 4 * np.eye(4)
    v = rng.standard_normal(4)
    rep = newton_baseline(lambda x: M @ x, lambda _: (lambda r: np.linalg.solve(M, r)), v, 1.0, 10.0, l2_norm)
    assert rep.success and rep.iterations == 1


def _scalar(eps, v):
    # F(u) = eps u - u^2 attains at most eps^2/4 (at u = eps/2)
    def F(x):
        return eps * x - x**2

    def L_at(x):
        return lambda r: r / (eps - 2 * x)

    return newton_baseline(F, L_at, np.array([v], complex), eps, radius=10.0, norm=sup_norm,
                           tol=1e-12, budget=200)


@pytest.mark.parametrize("eps", [0.5, 0.1, 0.02])
def test_newton_scalar_threshold(eps):
    edge = eps**2 / 4
    assert _scalar(eps, 0.98 * edge).success
    assert not _scalar(eps, 1.02 * edge).success


def test_newton_p1_contrast():
    """Small targets converge, targets of order eps^(g+0.1) do not.

    The chord threshold for this profile is about 0.0066 eps^2 in the block
    norm, so the common prefactor 0.006 sits just below it at eps^2.
    """
    blk_small = []
    blk_large = []
    for eps in (0.25, 0.125, 0.0625):
        blk = P1Block(eps=eps)
        p = blk.problem
        shape = np.zeros(blk.n, complex)
        k = p.grid.axis_modes()[blk.mask]
        shape[np.abs(k) <= 2] = 0.25 ** np.abs(k[np.abs(k) <= 2])
        shape /= blk.norm(shape)

        def L_at(_, blk=blk):
            return blk.L

        for store, power in ((blk_small, 2.5), (blk_large, 1.1)):
            c = 0.006 * eps**power
            rep = newton_baseline(blk.f, L_at, c * shape, eps, radius=1.0, norm=blk.norm, tol=1e-10 * c)
            store.append(rep.success)
    assert all(blk_small)
    assert not blk_large[-1]
