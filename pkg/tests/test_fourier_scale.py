import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tamegalerkin.fourier_scale import (
    FrequencyGrid,
    GridMismatchError,
    NormSpec,
    ScaleConstants,
    ScaleDomainError,
    ScaleFunction,
    derivative,
    from_bytes,
    interpolation_check,
    multiplier,
    norm,
    product,
    project,
    random_function,
    single_mode,
    to_bytes,
    verify_approx,
    verify_growth,
)

G16 = FrequencyGrid(1, 16)


def mode(k, grid=G16, amp=1.0):
    return single_mode(grid, k, amp)


# -- grid and carrier ------------------------------------------------------------


@pytest.mark.parametrize("d,N,comp", [(1, 4, 1), (2, 3, 2), (3, 2, 1)])
def test_grid_counts(d, N, comp):
    g = FrequencyGrid(d, N, comp)
    assert g.size == comp * (2 * N + 1) ** d
    assert g.shape == (comp,) + (2 * N + 1,) * d
    assert all(np.max(np.abs(k)) == N for k in g.wavenumbers())


def test_coefficient_count_must_match():
    with pytest.raises(GridMismatchError):
        ScaleFunction(G16, np.zeros(5))


def test_real_flag_checks_conjugate_symmetry():
    c = np.zeros(G16.shape, complex)
    c[0, 16 + 2] = 1.0
    with pytest.raises(ValueError):
        ScaleFunction(G16, c, real=True)
    c[0, 16 - 2] = 1.0
    assert ScaleFunction(G16, c, real=True).real


def test_coefficients_are_immutable():
    u = mode(1)
    with pytest.raises(ValueError):
        u.coefficients[0, 0] = 1.0


def test_constants_at_least_one():
    with pytest.raises(ValueError):
        ScaleConstants(A1=0.5)
    assert ScaleConstants.fourier(4.0).A1 == pytest.approx(4.0)


# -- norms ---------------------------------------------------------------------


@pytest.mark.parametrize(
    "spec,expected",
    [
        (NormSpec("plain", 2.0), 10.0),
        (NormSpec("plain", 0.0), 1.0),
        (NormSpec("epsilon", 2.0, 0.5), 3.25),
    ],
)
def test_single_mode_norms(spec, expected):
    assert norm(mode(3), spec) == pytest.approx(expected, rel=1e-12)


def test_norm_domain_error():
    with pytest.raises(ScaleDomainError):
        NormSpec("plain", -1.0)
    with pytest.raises(ScaleDomainError):
        NormSpec("plain", 5.0, ceiling=4.0)


def test_epsilon_norm_needs_epsilon():
    with pytest.raises(ValueError):
        NormSpec("epsilon", 1.0)


def test_time_banded_is_max_over_samples():
    samples = [mode(1, amp=a) for a in (0.5, 2.0, 1.0)]
    assert norm(samples, NormSpec("time", 0.0, 1.0)) == pytest.approx(2.0)


def test_norm_survives_huge_weights():
    u = mode(16, amp=1e-200)
    val = norm(u, NormSpec("plain", 300.0))
    assert np.isfinite(val) and val > 0


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 6), st.floats(0, 6), st.integers(0, 10_000))
def test_norm_monotone_in_s(s, t, seed):
    u = random_function(G16, np.random.default_rng(seed), decay=1.0)
    lo, hi = sorted((s, t))
    assert norm(u, NormSpec("plain", lo)) <= norm(u, NormSpec("plain", hi)) * (1 + 1e-12)


# -- projectors ------------------------------------------------------------------


def test_projector_examples():
    assert norm(project(mode(3), 2.0), NormSpec()) == 0.0
    u = mode(1) + mode(5)
    np.testing.assert_array_equal(project(u, 4.0).coefficients, mode(1).coefficients)
    w = random_function(G16, np.random.default_rng(0))
    np.testing.assert_array_equal(project(w, G16.max_bracket()).coefficients, w.coefficients)


@settings(max_examples=40, deadline=None)
@given(st.floats(1, 20), st.floats(1, 20), st.integers(0, 10_000))
def test_projector_nesting(lam_a, lam_b, seed):
    u = random_function(G16, np.random.default_rng(seed))
    lo, hi = sorted((lam_a, lam_b))
    np.testing.assert_array_equal(project(project(u, hi), lo).coefficients, project(u, lo).coefficients)
    np.testing.assert_array_equal(project(project(u, lo), hi).coefficients, project(u, lo).coefficients)


def test_floor_flag_uses_integer_cutoff():
    u = mode(3)  # <3> = sqrt(10) ~ 3.16
    assert norm(project(u, 3.5), NormSpec()) == 1.0
    assert norm(project(u, 3.5, floor=True), NormSpec()) == 0.0


def test_cutoff_below_one_rejected():
    with pytest.raises(ScaleDomainError):
        project(mode(1), 0.5)


def test_epsilon_cutoff_matches_rescaled_plain_weights():
    """Frequency rescaling: the epsilon norm of k is the plain-type weight of eps*k."""
    eps = 0.25
    for k in range(0, 17):
        u = mode(k)
        expected = (1 + (eps * k) ** 2) ** 1.5
        assert norm(u, NormSpec("epsilon", 3.0, eps)) == pytest.approx(expected)
        kept = norm(project(u, 2.0, "epsilon", epsilon=eps), NormSpec()) > 0
        assert kept == (eps * k <= 2.0)


# -- scale axioms ------------------------------------------------------------------


@pytest.mark.parametrize(
    "u,s,t,lam,expected",
    [(mode(3), 0.0, 0.0, 4.0, 1.0), (mode(3), 2.0, 0.0, 4.0, 0.1)],
)
def test_growth_examples(u, s, t, lam, expected):
    assert verify_growth(u, s, t, lam).ratio == pytest.approx(expected)


@pytest.mark.parametrize(
    "u,s,t,lam,expected",
    [(mode(3), 2.0, 1.0, 4.0, 0.0), (mode(3), 0.0, 0.0, 4.0, 0.0), (mode(5), 2.0, 0.0, 4.0, 16 / 26)],
)
def test_approx_examples(u, s, t, lam, expected):
    assert verify_approx(u, s, t, lam).ratio == pytest.approx(expected)


def test_zero_function_ratio_convention():
    z = ScaleFunction.zeros(G16)
    assert verify_growth(z, 1.0, 2.0, 3.0).ratio == 0.0
    assert verify_approx(z, 2.0, 1.0, 3.0).ratio == 0.0


def test_growth_random_draws_below_A1(rng):
    consts = ScaleConstants.fourier(4.0)
    worst = max(verify_growth(random_function(G16, rng), 1.0, 3.0, 8.0, consts).ratio for _ in range(1000))
    assert worst <= consts.A1


@pytest.mark.parametrize("lam", [2.0, 4.0, 8.0, 16.0])
def test_approx_random_draws_below_A2(rng, lam):
    worst = max(verify_approx(random_function(G16, rng), 3.0, 1.0, lam).ratio for _ in range(200))
    assert worst <= 1.0


def test_approx_tight_on_modes_just_above_cutoff():
    lam = 4.0
    r = verify_approx(mode(4), 2.0, 0.0, lam).ratio  # <4>^2 = 17
    assert r == pytest.approx(16 / 17)


def test_interpolation_examples():
    u = mode(1) + mode(4)
    assert interpolation_check(u, 0.0, 1.0, 2.0)
    assert interpolation_check(u, 1.0, 1.0, 1.0)
    m = mode(7)
    lhs = norm(m, NormSpec("plain", 1.3))
    rhs = norm(m, NormSpec("plain", 0.5)) ** 0.5 * norm(m, NormSpec("plain", 2.1)) ** 0.5
    assert lhs == pytest.approx(rhs, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 8), min_size=3, max_size=3), st.integers(0, 10_000), st.sampled_from(["plain", "epsilon"]))
def test_interpolation_random(ts, seed, variant):
    t1, s, t2 = sorted(ts)
    u = random_function(G16, np.random.default_rng(seed), decay=0.5)
    assert interpolation_check(u, t1, s, t2, rel_slack=1e-12, variant=variant, epsilon=0.3)


# -- arithmetic --------------------------------------------------------------------


def test_derivative_of_mode():
    np.testing.assert_allclose(derivative(mode(3)).coefficients, mode(3, amp=3j).coefficients)


def test_product_of_modes():
    np.testing.assert_allclose(product(mode(1), mode(2)).coefficients, mode(3).coefficients, atol=1e-15)


def test_product_truncates_and_does_not_alias():
    p = product(mode(10), mode(10))  # frequency 20 lies outside the grid
    assert np.max(np.abs(p.coefficients)) == 0.0


def test_product_2d_matches_direct_convolution(rng):
    g = FrequencyGrid(2, 4)
    u, w = random_function(g, rng), random_function(g, rng)
    got = product(u, w).coefficients[0]
    cu, cw = u.coefficients[0], w.coefficients[0]
    want = np.zeros_like(got)
    N = 4
    for a in range(-N, N + 1):
        for b in range(-N, N + 1):
            for c in range(-N, N + 1):
                for d in range(-N, N + 1):
                    k1, k2 = a + c, b + d
                    if abs(k1) <= N and abs(k2) <= N:
                        want[k1 + N, k2 + N] += cu[a + N, b + N] * cw[c + N, d + N]
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_product_grid_mismatch():
    with pytest.raises(GridMismatchError):
        product(mode(1), single_mode(FrequencyGrid(1, 8), 1))


def test_multiplier_identity(rng):
    u = random_function(G16, rng)
    np.testing.assert_array_equal(multiplier(u, lambda ks: np.ones_like(ks[0])).coefficients, u.coefficients)


def test_real_product_stays_real(rng):
    u = random_function(G16, rng, real=True)
    assert product(u, u).real


def test_serialization_roundtrip(rng):
    u = random_function(FrequencyGrid(2, 3, 2), rng, epsilon=0.5)
    back = from_bytes(to_bytes(u))
    np.testing.assert_array_equal(back.coefficients, u.coefficients)
    assert back.epsilon == 0.5 and back.grid == u.grid
    with pytest.raises(ValueError):
        from_bytes(b"XXXX" + to_bytes(u)[4:])
