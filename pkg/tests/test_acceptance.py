"""The eleven acceptance criteria, each at its stated tolerance and time budget.

Every test records one ``criterion N: PASS/FAIL`` line (shown in the
terminal summary and printed inline) before asserting.
"""

import time

import numpy as np
import pytest
from scipy.integrate import quad

from koopstab import bernstein as bz
from koopstab import catalog
from koopstab.bernstein_fp import solve_box_eigenfunctions
from koopstab.limit_cycle import pde_residual_grid, solve_limit_cycle_eigenfunction
from koopstab.stability import (
    GridSpec,
    basin_estimate,
    converges,
    make_lyapunov,
    sample_basin,
    verify_decay_envelope,
    verify_semigroup,
)
from koopstab.system import BoxMap, find_limit_cycle, floquet_exponents, jacobian_spectrum
from koopstab.taylor import estimate_radius, solve_all_taylor


@pytest.fixture
def record(acceptance_log):
    def _record(n, ok, detail):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        acceptance_log.append(line)
        print(line)
        return ok

    return _record


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_criterion_01_spectrum(record):
    with Clock() as c:
        spec = jacobian_spectrum(catalog.cubic_planar(), [0.0, 0.0])
    lam = spec.eigenvalues
    err = max(abs(lam[0] - (-0.698)), abs(lam[1] - (-1.052)))
    ok = err < 5e-3 and np.all(lam.imag == 0) and c.elapsed < 1
    assert record(1, ok, f"eigenvalues {lam.real.round(4).tolist()}, max error {err:.1e}, {c.elapsed:.2f}s")


def test_criterion_02_radius(record, cubic_planar_taylor75, build_times):
    with Clock() as c:
        radii = [estimate_radius(ef) for ef in cubic_planar_taylor75]
    elapsed = c.elapsed + build_times.get("taylor75", 0.0)
    rel = [abs(r / 1.212 - 1) for r in radii]
    ok = max(rel) < 0.10 and elapsed < 30
    assert record(2, ok, f"radii {np.round(radii, 4).tolist()} vs 1.212 (max rel {max(rel):.3f}), {elapsed:.1f}s")


def test_criterion_03_bernstein_certification(record, cubic_planar, cubic_planar_box, cubic_planar_bernstein75,
                                              build_times):
    rng = np.random.default_rng(0)
    with Clock() as smoke:
        _, efs40 = solve_box_eigenfunctions(cubic_planar, cubic_planar_box, 40)
    res40 = max(ef.lsq_residual for ef in efs40)
    with Clock() as c:
        efs = cubic_planar_bernstein75
        pts = rng.uniform(-1.9, 1.9, (200, 2))
        sg = [verify_semigroup(ef, ef.eigenvalue, cubic_planar, pts, 1.0) for ef in efs]
        env = verify_decay_envelope(make_lyapunov(efs), cubic_planar, pts, 1.0)
    elapsed = c.elapsed + build_times.get("bernstein75", 0.0)
    res = max(ef.lsq_residual for ef in efs)
    sg_err = max(r.max_error for r in sg)
    used = min(r.n_used for r in sg)
    ok = res < 1e-3 and sg_err < 1e-3 and used == 200 and env and elapsed < 600
    ok_smoke = res40 < 1e-2 and smoke.elapsed < 60
    assert record(
        3, ok and ok_smoke,
        f"s=75 residual {res:.2e}, semigroup {sg_err:.2e} ({used} pts), envelope {env}, {elapsed:.0f}s; "
        f"s=40 residual {res40:.2e} in {smoke.elapsed:.1f}s",
    )


def test_criterion_04_dichotomy(record):
    sys = catalog.backward_van_der_pol()
    box = BoxMap(np.array([-3.0, -3.0]), np.array([3.0, 3.0]))
    res = {}
    for s in (20, 40, 60):
        _, efs = solve_box_eigenfunctions(sys, box, s)
        res[s] = min(ef.lsq_residual for ef in efs)
    ok = all(r >= 1e-2 for r in res.values())
    assert record(4, ok, "min residual by degree " + ", ".join(f"{s}: {r:.3g}" for s, r in res.items()))


def _basin_check(system, box, orders, rng, saddles=()):
    out = []
    grid = GridSpec((-box, -box), (box, box), (161, 161))
    for order in orders:
        t0 = time.perf_counter()
        spec = jacobian_spectrum(system, [0.0, 0.0])
        V = make_lyapunov(solve_all_taylor(system, spec, order))
        b = basin_estimate(V, system, grid)
        pts = sample_basin(b, V, 500, rng) if b.certified else np.empty((0, 2))
        rate = abs(max(spec.eigenvalues.real))
        fails = int(np.sum(~converges(system, pts, [0.0, 0.0], 50 / rate)))
        excluded = not np.any(b.contains(V, np.array(saddles))) if saddles else True
        out.append((order, b.certified, b.level, len(pts), fails, excluded, time.perf_counter() - t0))
    return out


def test_criterion_05_basin_soundness(record):
    rng = np.random.default_rng(5)
    s6 = np.sqrt(6)
    rows = _basin_check(catalog.backward_van_der_pol(), 3.0, (14, 20), rng)
    rows += _basin_check(catalog.saddle_pair(), 4.0, (14, 20), rng, saddles=[(s6, 0.0), (-s6, 0.0)])
    ok = all(cert and n == 500 and f == 0 and exc and t < 120 for _, cert, _, n, f, exc, t in rows)
    detail = "; ".join(
        f"{'ex3' if i < 2 else 'ex4'} order {o}: c={c:.3g} {n - f}/{n} converge, saddles excluded {exc}, {t:.0f}s"
        for i, (o, _, c, n, f, exc, t) in enumerate(rows)
    )
    assert record(5, ok, detail)


def test_criterion_06_floquet(record):
    with Clock() as c:
        sys = catalog.modulated_circle()
        lc = find_limit_cycle(sys, [1.3, 0.0], er_norm=2.0)
        (lam,) = floquet_exponents(sys, lc)
    err = abs(lam - (-4))
    ok = err < 1e-6 and c.elapsed < 10
    assert record(6, ok, f"exponent {lam.real:.10f} (error {err:.1e}), {c.elapsed:.1f}s")


def test_criterion_07_limit_cycle(record, modulated, modulated_solution, build_times):
    ef = modulated_solution
    rng = np.random.default_rng(7)
    with Clock() as c:
        R, phi = pde_residual_grid(modulated, ef, 2 * 4 * 81, 2 * 2 * (3 + 1))
        fresh = float(np.max(np.abs(R)))
        bound = 10 * ef.lsq_residual * float(np.max(np.abs(phi)))
        pts = ef.lc.from_polar(rng.uniform(0, 2 * np.pi, 200), rng.uniform(0, 1, 200))
        sg = verify_semigroup(ef, ef.eigenvalue, modulated, pts, ef.lc.period / 2)
    elapsed = c.elapsed + build_times.get("modulated", 0.0) + build_times.get("modulated_cycle", 0.0)
    ok = ef.certified and fresh <= bound and sg.max_error < 1e-3 and sg.n_used == 200 and elapsed < 300
    assert record(
        7, ok,
        f"residual {ef.lsq_residual:.2e} (certified {ef.certified}), fresh grid {fresh:.2e} <= {bound:.2e}, "
        f"semigroup {sg.max_error:.2e} ({sg.n_used} pts), {elapsed:.0f}s",
    )


def test_criterion_08_radial_oracle(record):
    with Clock() as c:
        sys = catalog.circle()
        lc = find_limit_cycle(sys, [1.5, 0.0], er_norm=1.0)
        (lam,) = floquet_exponents(sys, lc)
        ef = solve_limit_cycle_eigenfunction(sys, lc, lam.real, 4, 20)
        y = np.linspace(0.02, 1, 50)
        th = np.linspace(0, 2 * np.pi, 50, endpoint=False)
        integrand = lambda u: lam.real / (-u * (1 + u)) - 1 / u  # noqa: E731
        ref = np.array([yy * np.exp(quad(integrand, 0, yy, epsabs=1e-14, epsrel=1e-13)[0]) for yy in y])
        got = ef.eval_polar(th[:, None], y[None, :])
        err = float(np.max(np.abs(got - ref) / np.abs(ref)))
    ok = err < 1e-6 and c.elapsed < 60
    assert record(8, ok, f"max relative error {err:.2e}, {c.elapsed:.1f}s")


def test_criterion_09_bernstein_properties(record):
    rng = np.random.default_rng(9)
    checks = {"unity": 0, "raise": 0, "derivative": 0, "multiply": 0, "tensor": 0}
    passed = dict.fromkeys(checks, 0)
    with Clock() as c:
        for _ in range(100):
            s, r, sq = rng.integers(0, 30), rng.integers(0, 10), rng.integers(0, 6)
            x = rng.uniform(0, 1, 20)
            checks["unity"] += 1
            passed["unity"] += np.max(np.abs(bz.eval_basis_1d(s, x).sum(-1) - 1)) < 1e-12
            P = rng.normal(size=s + 1)
            ref = bz.eval_basis_1d(s, x) @ P
            got = bz.eval_basis_1d(s + r, x) @ (bz.raise_matrix_1d(s, r) @ P)
            checks["raise"] += 1
            passed["raise"] += np.max(np.abs(got - ref)) < 1e-12 * max(1, np.max(np.abs(ref)))
            if s >= 1:
                h, xi = 1e-5, rng.uniform(0.05, 0.95, 10)
                d = bz.eval_basis_1d(s, xi) @ (bz.diff_matrix_1d(s) @ P)
                fd = (bz.eval_basis_1d(s, xi + h) @ P - bz.eval_basis_1d(s, xi - h) @ P) / (2 * h)
                checks["derivative"] += 1
                passed["derivative"] += np.max(np.abs(d - fd) / np.maximum(np.abs(fd), 1)) < 1e-6
            Q = rng.normal(size=sq + 1)
            prod = bz.eval_basis_1d(s + sq, x) @ (bz.mult_matrix_1d(Q, s) @ P)
            ref = (bz.eval_basis_1d(sq, x) @ Q) * (bz.eval_basis_1d(s, x) @ P)
            checks["multiply"] += 1
            passed["multiply"] += np.max(np.abs(prod - ref)) < 1e-11 * max(1, np.max(np.abs(ref)))
        for s in range(5):
            for sq in range(4):
                P, Q = rng.normal(size=(s + 1) ** 2), rng.normal(size=(sq + 1) ** 2)
                g = np.linspace(0.05, 0.95, s + sq + 1)
                nodes = np.array([(a, b) for a in g for b in g])
                B_s, B_hi = bz.tensor_basis(s, nodes), bz.tensor_basis(s + sq, nodes)
                q = bz.eval_tensor(Q, sq, nodes)
                dense_mult = np.linalg.solve(B_hi, (q[:, None] * B_s) @ P)
                dense_raise = np.linalg.solve(B_hi, B_s @ P)
                grads = np.array([bz.tensor_basis_gradient(s, u).T @ P for u in nodes])
                ok = np.allclose(bz.tensor_mult_matrix(Q, sq, s, 2) @ P, dense_mult, atol=1e-9)
                ok &= np.allclose(bz.tensor_raise_matrix(s, sq, 2) @ P, dense_raise, atol=1e-9)
                for axis in range(2):
                    dv = bz.eval_tensor(bz.tensor_diff_matrix(axis, s, 2) @ P, s, nodes)
                    ok &= np.allclose(dv, grads[:, axis], atol=1e-9)
                checks["tensor"] += 1
                passed["tensor"] += bool(ok)
    ok = passed == checks and c.elapsed < 30
    assert record(9, ok, ", ".join(f"{k} {passed[k]}/{checks[k]}" for k in checks) + f", {c.elapsed:.1f}s")


def _random_stable(rng, n):
    while True:
        A = rng.normal(size=(n, n))
        A -= (np.max(np.linalg.eigvals(A).real) + rng.uniform(0.2, 1.5)) * np.eye(n)
        spec = jacobian_spectrum(catalog.linear(A), np.zeros(n))
        if spec.nonresonant:
            return A, spec


def test_criterion_10_linear_exactness(record):
    rng = np.random.default_rng(10)
    worst_coeff, worst_sg = 0.0, 0.0
    with Clock() as c:
        for n in (2, 2, 2, 3, 3, 3):
            A, spec = _random_stable(rng, n)
            sys = catalog.linear(A)
            pts = rng.uniform(-1, 1, (20, n))
            for ef in solve_all_taylor(sys, spec, 5):
                high = ef.coeff_array.copy()
                for i in range(n):
                    high[tuple(np.eye(n, dtype=int)[i])] = 0
                worst_coeff = max(worst_coeff, float(np.max(np.abs(high))))
                rep = verify_semigroup(ef, ef.eigenvalue, sys, pts, 1.0, rtol=1e-12, atol=1e-14)
                worst_sg = max(worst_sg, rep.max_error)
    ok = worst_coeff < 1e-12 and worst_sg < 1e-9 and c.elapsed < 10
    assert record(10, ok, f"max higher-order coeff {worst_coeff:.1e}, semigroup {worst_sg:.1e}, {c.elapsed:.1f}s")


class _ClosedForm:
    eigenvalue = -1.0

    def __call__(self, x):
        return np.exp(-1 / (2 * np.asarray(x)[..., 0] ** 2))


def test_criterion_11_nonhyperbolic(record):
    with Clock() as c:
        pts = np.linspace(0.5, 2.0, 61)[:, None]
        rep = verify_semigroup(_ClosedForm(), -1.0, catalog.cubic_decay(), pts, 1.0)
    ok = rep.max_error < 1e-6 and rep.n_used == 61 and c.elapsed < 5
    assert record(11, ok, f"semigroup {rep.max_error:.2e} on x in [0.5, 2], {c.elapsed:.2f}s")
