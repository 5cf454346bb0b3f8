import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from koopstab import catalog
from koopstab.poly import MonomialPoly
from koopstab.system import DefectiveJacobianError, DynamicalSystem, jacobian_spectrum
from koopstab.taylor import (
    ResonanceError,
    estimate_radius,
    from_coefficients,
    order_growth,
    pde_residual,
    product_eigenfunction,
    solve_all_taylor,
    solve_taylor,
)


def ball(n_pts, radius, rng):
    r = radius * np.sqrt(rng.uniform(0, 1, n_pts))
    t = rng.uniform(0, 2 * np.pi, n_pts)
    return np.stack([r * np.cos(t), r * np.sin(t)], axis=1)


stable_2x2 = st.tuples(*[st.floats(-2, 2)] * 4).map(lambda a: np.array(a).reshape(2, 2) - 2.5 * np.eye(2))


@given(stable_2x2)
def test_linear_series_is_linear(A):
    sys = catalog.linear(A)
    try:
        spec = jacobian_spectrum(sys, [0, 0])
    except DefectiveJacobianError:
        assume(False)
    assume(spec.nonresonant)  # exact integer ratios make the recursion singular
    for ef in solve_all_taylor(sys, spec, 6):
        A_ = ef.coeff_array.copy()
        for i in range(2):
            A_[tuple(np.eye(2, dtype=int)[i])] = 0
        assert np.max(np.abs(A_)) < 1e-12
        x = np.array([0.3, -1.2])
        assert abs(ef(x) - ef.gradient_seed @ x) < 1e-12


def test_scalar_recursion():
    """xdot = -x + x^2 has phi = x / (1 - x): every coefficient equals 1."""
    x = MonomialPoly.variable(1, 0)
    sys = DynamicalSystem((-x + x**2,))
    ef = solve_taylor(sys, jacobian_spectrum(sys, [0.0]), 0, 30)
    np.testing.assert_allclose(ef.coeff_array[1:], 1, atol=1e-12)
    assert ef.coeff_array[0] == 0
    xs = np.linspace(-0.4, 0.4, 9)[:, None]
    np.testing.assert_allclose(ef(xs).real, xs[:, 0] / (1 - xs[:, 0]), atol=1e-9)


def test_value_at_center(cubic_planar_taylor75):
    for ef in cubic_planar_taylor75:
        assert ef(np.zeros(2)) == 0


def test_eig_index_range(cubic_planar, cubic_planar_spectrum):
    with pytest.raises(IndexError):
        solve_taylor(cubic_planar, cubic_planar_spectrum, 2, 5)


def test_resonance_detected():
    sys = catalog.linear(np.diag([-1.0, -2.0]))
    x1 = MonomialPoly.variable(2, 0)
    sys = DynamicalSystem((sys.components[0], sys.components[1] + x1**2))
    spec = jacobian_spectrum(sys, [0, 0])
    with pytest.raises(ResonanceError) as info:
        solve_taylor(sys, spec, 1, 5)
    assert info.value.order == 2


def test_not_fixed_point(cubic_planar):
    spec = jacobian_spectrum(cubic_planar, [0.1, 0.0])
    with pytest.raises(ValueError):
        solve_taylor(cubic_planar, spec, 0, 4)


def test_pde_residual_small_inside_disk(cubic_planar, cubic_planar_taylor75, rng):
    pts = ball(2000, 0.8, rng)
    for ef in cubic_planar_taylor75:
        assert np.max(np.abs(pde_residual(cubic_planar, ef, pts))) < 1e-10


@pytest.mark.xfail(
    strict=True,
    reason="order-75 truncation error near |x| = 1 is ~2e-6 (singularity at radius ~1.21)",
)
def test_pde_residual_unit_ball(cubic_planar, cubic_planar_taylor75, rng):
    pts = np.vstack([ball(4000, 1.0, rng), ball(1, 0, rng)])
    t = np.linspace(0, 2 * np.pi, 720, endpoint=False)
    pts = np.vstack([pts, np.stack([np.cos(t), np.sin(t)], 1)])
    worst = max(np.max(np.abs(pde_residual(cubic_planar, ef, pts))) for ef in cubic_planar_taylor75)
    assert worst < 1e-6


def test_truncation_stability(cubic_planar_taylor75):
    x = np.array([0.5, 0.5])
    for ef in cubic_planar_taylor75:
        assert abs(ef(x, order=60) - ef(x)) < 1e-8


def test_gradient_seed(cubic_planar_taylor75, cubic_planar_spectrum):
    for i, ef in enumerate(cubic_planar_taylor75):
        np.testing.assert_allclose(ef.gradient(np.zeros(2)), cubic_planar_spectrum.left_eigenvectors[:, i])


def test_complex_pair_conjugate():
    sys = catalog.backward_van_der_pol()
    spec = jacobian_spectrum(sys, [0, 0])
    a, b = solve_all_taylor(sys, spec, 12)
    np.testing.assert_allclose(a.coeff_array, b.coeff_array.conj())
    direct = solve_taylor(sys, spec, 1, 12)
    np.testing.assert_allclose(direct.coeff_array, b.coeff_array, atol=1e-12)


# radius


def test_radius_linear_is_infinite():
    sys = catalog.linear([[-1.0, 0.3], [0.0, -2.2]])
    (ef, _) = solve_all_taylor(sys, jacobian_spectrum(sys, [0, 0]), 24)
    assert estimate_radius(ef) == np.inf


@pytest.mark.parametrize("rho", [0.5, 1.3, 4.0])
def test_radius_geometric_series(rho):
    coeffs = {(s, 0): rho**-s for s in range(1, 41)}
    coeffs.update({(0, s): 0.5 * rho**-s for s in range(1, 41)})
    ef = from_coefficients([0, 0], -1, coeffs, 40)
    assert abs(estimate_radius(ef) / rho - 1) < 0.02
    assert abs(estimate_radius(ef, "coefficient") / rho - 1) < 0.02


def test_radius_needs_orders():
    ef = from_coefficients([0.0], -1, {(1,): 1.0}, 10)
    with pytest.raises(ValueError):
        estimate_radius(ef)


def test_radius_cubic_planar(cubic_planar_taylor75):
    for ef in cubic_planar_taylor75:
        assert 1.09 <= estimate_radius(ef) <= 1.33


def test_order_growth_methods(cubic_planar_taylor75):
    ef = cubic_planar_taylor75[0]
    d, c = order_growth(ef), order_growth(ef, "coefficient")
    assert d.shape == c.shape == (76,)
    with pytest.raises(ValueError):
        order_growth(ef, "bogus")


# products


def test_product_single_identity(cubic_planar_taylor75):
    ef = cubic_planar_taylor75[0]
    p = product_eigenfunction([ef], [1])
    np.testing.assert_array_equal(p.coeff_array, ef.coeff_array)
    assert p.eigenvalue == ef.eigenvalue


def test_product_linear_square(rng):
    sys = catalog.linear([[-1.0, 0.5], [0.0, -1.7]])
    (ef, _) = solve_all_taylor(sys, jacobian_spectrum(sys, [0, 0]), 4)
    sq = product_eigenfunction([ef], [2])
    assert sq.eigenvalue == 2 * ef.eigenvalue
    x = rng.uniform(-2, 2, (20, 2))
    np.testing.assert_allclose(sq(x), (x @ ef.gradient_seed) ** 2, atol=1e-12)
    assert np.max(np.abs(pde_residual(sys, sq, x))) < 1e-12


def test_product_cubic_planar(cubic_planar, cubic_planar_taylor75, rng):
    p = product_eigenfunction(cubic_planar_taylor75, [1, 1])
    assert abs(p.eigenvalue - sum(ef.eigenvalue for ef in cubic_planar_taylor75)) < 1e-15
    assert np.max(np.abs(pde_residual(cubic_planar, p, ball(1000, 0.8, rng)))) < 1e-5


def test_product_argument_checks(cubic_planar_taylor75):
    with pytest.raises(ValueError):
        product_eigenfunction(cubic_planar_taylor75, [1])
