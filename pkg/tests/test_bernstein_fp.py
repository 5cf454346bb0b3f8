import numpy as np
import pytest

from koopstab import bernstein as bz
from koopstab import catalog
from koopstab.bernstein_fp import (
    assemble_fp_system,
    eval_bernstein,
    field_bernstein_coeffs,
    gradient_box,
    solve_box_eigenfunctions,
    solve_fp,
)
from koopstab.poly import MonomialPoly
from koopstab.stability import make_lyapunov, verify_decay_envelope, verify_semigroup
from koopstab.system import BoxMap, DynamicalSystem, jacobian_spectrum, pull_back_field

HALF_BOX = BoxMap(np.array([-0.5]), np.array([0.5]))


def unit_linear_1d():
    u = MonomialPoly.variable(1, 0)
    return DynamicalSystem((0.5 - u,))


def test_linear_1d_exact():
    sys_box = unit_linear_1d()
    spec = jacobian_spectrum(sys_box, [0.5])
    fps = assemble_fp_system(sys_box, spec, 0, 3)
    ef = solve_fp(fps, HALF_BOX)
    assert ef.lsq_residual < 1e-12
    assert ef.certified
    np.testing.assert_allclose(ef.coeffs, [-1 / 2, -1 / 6, 1 / 6, 1 / 2], atol=1e-12)
    assert abs(ef.eval_box(np.array([0.75])) - 0.25) < 1e-12


def test_linear_1d_through_box_map():
    _, (ef,) = solve_box_eigenfunctions(catalog.linear([[-1.0]]), HALF_BOX, 3)
    assert abs(eval_bernstein(ef, np.array([0.25])) - 0.25) < 1e-12
    np.testing.assert_allclose(ef.fixed_point, [0.0], atol=1e-15)


def test_decoupled_separable():
    sys = catalog.linear(np.diag([-1.0, -2.0]))
    box = BoxMap(np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
    _, (phi1, _) = solve_box_eigenfunctions(sys, box, 4)
    C = phi1.coeffs.reshape(5, 5)
    # constant along u2: every column of the coefficient grid is the same
    assert np.max(np.abs(C - C[:, :1])) < 1e-10
    # affine in u1: second differences of the Bernstein coefficients vanish
    assert np.max(np.abs(np.diff(C[:, 0], 2))) < 1e-10


def test_system_dimensions(cubic_planar):
    box = BoxMap(np.array([-2.0, -2.0]), np.array([2.0, 2.0]))
    sys_box = pull_back_field(cubic_planar, box)
    spec = jacobian_spectrum(sys_box, [0.5, 0.5])
    for s in (5, 75):
        fps = assemble_fp_system(sys_box, spec, 0, s)
        assert fps.s_prime == 3
        assert fps.n_pde_rows == (s + 3 + 1) ** 2
        assert fps.shape == ((s + 4) ** 2 + 3, (s + 1) ** 2)


def test_field_degree_cap():
    x = MonomialPoly.variable(1, 0)
    sys = DynamicalSystem((-x + 1e-9 * x ** (bz.MAX_DEGREE + 1),))
    with pytest.raises(bz.DegreeError):
        field_bernstein_coeffs(sys)


def test_field_coefficients_reproduce_field(cubic_planar, rng):
    sys_box = pull_back_field(cubic_planar, BoxMap(np.array([-2.0, -2.0]), np.array([2.0, 2.0])))
    s_prime, qs = field_bernstein_coeffs(sys_box)
    u = rng.uniform(0, 1, (20, 2))
    F = sys_box.rhs(u)
    for l, q in enumerate(qs):
        assert np.max(np.abs(bz.eval_tensor(q, s_prime, u) - F[:, l])) < 1e-13


def test_fixed_point_value_and_gradient(cubic_planar_bernstein40):
    for ef in cubic_planar_bernstein40:
        assert abs(ef(ef.fixed_point)) < 10 * ef.lsq_residual
        g = gradient_box(ef, ef.fixed_point_box)
        tol = max(1e-6, 100 * ef.lsq_residual)
        assert np.linalg.norm(g - ef.seed) / np.linalg.norm(ef.seed) < tol


def test_degree_40_smoke(cubic_planar_bernstein40):
    assert all(ef.lsq_residual < 1e-2 for ef in cubic_planar_bernstein40)


def test_outside_flag(cubic_planar_bernstein40):
    ef = cubic_planar_bernstein40[0]
    _, outside = eval_bernstein(ef, np.array([[0.0, 0.0], [2.5, 0.0]]), with_flag=True)
    assert outside.tolist() == [False, True]


def test_conjugate_partner():
    sys = catalog.backward_van_der_pol()
    box = BoxMap(np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
    _, (a, b) = solve_box_eigenfunctions(sys, box, 8)
    np.testing.assert_allclose(b.coeffs, a.coeffs.conj())
    assert b.eigenvalue == a.eigenvalue.conjugate()


def test_monotone_residual(cubic_planar, cubic_planar_box, cubic_planar_bernstein75):
    r = {}
    for s in (25, 50):
        _, efs = solve_box_eigenfunctions(cubic_planar, cubic_planar_box, s)
        r[s] = [ef.lsq_residual for ef in efs]
    r[75] = [ef.lsq_residual for ef in cubic_planar_bernstein75]
    for i in range(2):
        assert r[75][i] <= r[50][i] <= r[25][i]


def test_certified_degree_75(cubic_planar, cubic_planar_bernstein75, rng):
    pts = rng.uniform(-1.9, 1.9, (50, 2))
    for ef in cubic_planar_bernstein75:
        assert ef.certified
        rep = verify_semigroup(ef, ef.eigenvalue, cubic_planar, pts, 1.0, floor=1e-6)
        assert rep.n_used == 50
        assert rep.max_error < 1e-3
    V = make_lyapunov(cubic_planar_bernstein75)
    assert verify_decay_envelope(V, cubic_planar, pts, 1.0)


def test_dichotomy_not_certified():
    sys = catalog.backward_van_der_pol()
    box = BoxMap(np.array([-3.0, -3.0]), np.array([3.0, 3.0]))
    _, efs = solve_box_eigenfunctions(sys, box, 40)
    for ef in efs:
        assert not ef.certified
        assert ef.lsq_residual >= 1e-2
