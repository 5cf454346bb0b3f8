"""Stable-Floquet eigenfunction on an annulus around a planar limit cycle.

The eigenfunction is expanded as ``sum_{n,k} Phi[n, k] e^{i n theta} b_k^s(y)``
(Fourier index outer, Bernstein index inner) in the annulus coordinates of
:class:`~koopstab.system.LimitCycleParam`.  The eigenvalue equation
``F_y dphi/dy + F_theta dphi/dtheta = lambda phi`` is imposed on the
coefficients, together with ``phi = 0`` and ``dphi/dy = g(theta)`` on the
cycle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import bernstein as bz
from .bernstein_fp import CERTIFY_THRESHOLD, lstsq_min_norm
from .system import LimitCycleParam, polar_dynamics


class ProjectionError(RuntimeError):
    pass


class ParametrizationError(RuntimeError):
    pass


class AnnulusError(ValueError):
    def __init__(self, y):
        super().__init__(f"point lies outside the annulus (y = {np.ravel(y)[0]:.6g})")
        self.y = y


def harmonics(n_bar: int) -> np.ndarray:
    return np.arange(-n_bar, n_bar + 1)


def chebyshev_unit(m: int) -> np.ndarray:
    j = np.arange(m)
    return 0.5 * (1 - np.cos((2 * j + 1) * np.pi / (2 * m)))


@dataclass(frozen=True)
class FieldProjection:
    f_theta: np.ndarray  # (2 n_bar + 1, s' + 1)
    f_y: np.ndarray
    n_bar: int
    s_prime: int
    error: float
    scale: float


def _fourier_rows(values: np.ndarray, n_bar: int) -> np.ndarray:
    """Coefficients ``c_n`` (n = -n_bar..n_bar) of samples on a uniform theta grid along axis 0."""
    m = values.shape[0]
    spec = np.fft.fft(values, axis=0) / m
    return spec[harmonics(n_bar) % m]


def project_field(system, lc: LimitCycleParam, n_bar: int, s_prime: int, *, tol: float = 1e-4) -> FieldProjection:
    """Least-squares Fourier-Bernstein coefficients of ``F_theta`` and ``F_y`` on the annulus."""
    n_theta = 4 * (2 * n_bar + 1)
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    y = chebyshev_unit(2 * (s_prime + 1))
    T, Y = np.meshgrid(theta, y, indexing="ij")
    f_t, f_y = polar_dynamics(system, lc, T, Y)
    B = bz.eval_basis_1d(s_prime, y)
    pinv = np.linalg.pinv(B)
    out = []
    err = 0.0
    for vals in (f_t, f_y):
        c = _fourier_rows(vals, n_bar) @ pinv.T  # (2n+1, s'+1)
        recon = (np.exp(1j * np.outer(theta, harmonics(n_bar))) @ c @ B.T).real
        err = max(err, float(np.max(np.abs(recon - vals))))
        out.append(c)
    scale = float(max(np.max(np.abs(f_t)), np.max(np.abs(f_y)), 1e-300))
    if err > tol * scale:
        raise ProjectionError(f"projection error {err:.2e} exceeds {tol:g} x field scale; increase n_bar or s'")
    return FieldProjection(out[0], out[1], n_bar, s_prime, err, scale)


def auto_project(system, lc: LimitCycleParam, n_bar: int, *, start: int = 3, cap: int = 24, tol: float = 1e-4):
    """Smallest ``s'`` in ``[start, cap]`` whose projection passes the error check."""
    err = None
    for s_prime in range(start, cap + 1):
        try:
            return project_field(system, lc, n_bar, s_prime, tol=tol)
        except ProjectionError as exc:
            err = exc
    raise err


def _dfy_dy(system, lc, theta, step=1e-6):
    y0 = -lc.delta
    _, up = polar_dynamics(system, lc, theta, y0 + step)
    _, dn = polar_dynamics(system, lc, theta, y0 - step)
    return (up - dn) / (2 * step)


def _cumulative_integral(f, edges, *, tol=1e-11, max_split=64):
    """Cumulative integral of vectorized ``f`` over consecutive ``edges``.

    Each panel uses 20-point Gauss-Legendre; panels are split in halves until
    the 20- and 10-point rules agree to ``tol``.
    """
    rules = [np.polynomial.legendre.leggauss(m) for m in (10, 20)]
    split = 1
    while True:
        sub = np.linspace(edges[:-1], edges[1:], split + 1).T  # (panels, split+1)
        lo, hi = sub[:, :-1].ravel(), sub[:, 1:].ravel()
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        est = []
        for nodes, weights in rules:
            vals = f(mid[:, None] + half[:, None] * nodes)
            est.append(half * (vals @ weights))
        if np.max(np.abs(est[1] - est[0])) <= tol or split >= max_split:
            break
        split *= 2
    per_panel = est[1].reshape(len(edges) - 1, split).sum(axis=1)
    return np.concatenate([[0], np.cumsum(per_panel)])


def boundary_profile(system, lc: LimitCycleParam, lam: complex, n_nodes: int):
    """Nodes ``theta_j`` and ``g(theta_j) = dphi/dy`` on the cycle, with ``g(0) = 1``."""
    theta = 2 * np.pi * np.arange(n_nodes + 1) / n_nodes
    f_t, _ = polar_dynamics(system, lc, theta, -lc.delta)
    if np.any(np.sign(f_t) != np.sign(f_t[0])) or np.any(f_t == 0):
        raise ParametrizationError("F_theta changes sign on the cycle")

    def integrand(sig):
        ft, _ = polar_dynamics(system, lc, sig, -lc.delta)
        if np.any(np.sign(ft) != np.sign(f_t[0])):
            raise ParametrizationError("F_theta changes sign on the cycle")
        return (lam - _dfy_dy(system, lc, sig)) / ft

    if complex(lam).imag == 0:
        lam = float(np.real(lam))
    G = _cumulative_integral(integrand, theta)
    g = np.exp(G)
    if abs(g[-1] - g[0]) > 1e-6 * max(1.0, abs(g[0])):
        raise ParametrizationError(f"g(2 pi) = {g[-1]:.8g} differs from g(0) = {g[0]:.8g}; exponent inconsistent")
    return theta[:-1], g[:-1]


def boundary_c2(system, lc: LimitCycleParam, lam: complex, n_bar: int) -> np.ndarray:
    """Fourier coefficients of ``dphi/dy`` on the cycle."""
    _, g = boundary_profile(system, lc, lam, 4 * (2 * n_bar + 1))
    return _fourier_rows(g.astype(complex), n_bar)


def _shift(n_bar: int, n: int) -> sp.csr_matrix:
    """``M^{n,theta}``: harmonic ``j`` -> ``j + n``, truncated to ``|.| <= n_bar``."""
    return sp.eye(2 * n_bar + 1, k=-n, format="csr")


@dataclass(frozen=True)
class LimitCycleSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    n_pde_rows: int
    n_bar: int
    degree: int
    s_prime: int
    eigenvalue: complex
    harmonic_stride: int
    kept: np.ndarray  # retained harmonics
    c2: np.ndarray
    delta: float


def _mult_operator(coeffs: np.ndarray, n_bar: int, s: int, s_prime: int) -> sp.csr_matrix:
    singles = [bz.basis_mult_matrix_1d(k, s_prime, s) for k in range(s_prime + 1)]
    size = ((2 * n_bar + 1) * (s + s_prime + 1), (2 * n_bar + 1) * (s + 1))
    out = sp.csr_matrix(size, dtype=complex)
    for a, n in enumerate(harmonics(n_bar)):
        row = coeffs[a]
        if not np.any(np.abs(row) > 1e-15 * max(1.0, np.max(np.abs(coeffs)))):
            continue
        my = None
        for k in range(s_prime + 1):
            if row[k] != 0:
                my = row[k] * singles[k] if my is None else my + row[k] * singles[k]
        out = out + sp.kron(_shift(n_bar, n), my, format="csr")
    return out


def assemble_lc_system(
    proj: FieldProjection,
    c2: np.ndarray,
    lam: complex,
    n_bar: int,
    s: int,
    *,
    harmonic_stride: int = 1,
    delta: float = 0.0,
    weight: float = 1.0,
) -> LimitCycleSystem:
    """Stacked PDE / boundary-value / boundary-slope system (rows unweighted by default)."""
    s_prime = proj.s_prime
    K = 2 * n_bar + 1
    ns = harmonics(n_bar)
    Dy = sp.kron(sp.identity(K), bz.diff_matrix_1d(s), format="csr")
    Dth = sp.kron(sp.diags(1j * ns), sp.identity(s + 1), format="csr")
    T = sp.kron(sp.identity(K), bz.raise_matrix_1d(s, s_prime), format="csr")
    pde = (
        _mult_operator(proj.f_y, n_bar, s, s_prime) @ Dy
        + _mult_operator(proj.f_theta, n_bar, s, s_prime) @ Dth
        - lam * T
    ).tocsr()
    y0 = np.array([-delta])
    val = sp.kron(sp.identity(K), bz.eval_basis_1d(s, y0)[0][None, :], format="csr")
    der = sp.kron(sp.identity(K), bz.eval_basis_deriv_1d(s, y0)[0][None, :], format="csr")

    keep_h = ns % harmonic_stride == 0
    cols = np.repeat(keep_h, s + 1)
    pde_rows = np.repeat(keep_h, s + s_prime + 1)
    pde = pde[pde_rows][:, cols]
    val = val[keep_h][:, cols]
    der = der[keep_h][:, cols]
    n_pde = pde.shape[0]
    A = sp.vstack([pde, weight * val, weight * der], format="csr")
    b = np.concatenate([np.zeros(n_pde + val.shape[0], dtype=complex), weight * np.asarray(c2)[keep_h]])
    return LimitCycleSystem(A, b, n_pde, n_bar, s, s_prime, complex(lam), harmonic_stride, ns[keep_h],
                            np.asarray(c2), delta)


@dataclass(frozen=True)
class FourierBernsteinEigenfunction:
    lc: LimitCycleParam
    n_bar: int
    degree: int
    eigenvalue: complex
    coeffs: np.ndarray  # (2 n_bar + 1, s + 1), zero rows for dropped harmonics
    c2: np.ndarray
    lsq_residual: float
    harmonic_stride: int
    certified: bool
    threshold: float = CERTIFY_THRESHOLD

    def eval_polar(self, theta, y):
        theta, y = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(y, dtype=float))
        E = np.exp(1j * theta[..., None] * harmonics(self.n_bar))
        B = bz.eval_basis_1d(self.degree, y)
        return np.einsum("...n,nk,...k->...", E, self.coeffs, B)

    def dy_polar(self, theta, y):
        theta, y = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(y, dtype=float))
        E = np.exp(1j * theta[..., None] * harmonics(self.n_bar))
        dB = bz.eval_basis_deriv_1d(self.degree, y)
        return np.einsum("...n,nk,...k->...", E, self.coeffs, dB)

    def __call__(self, x):
        return eval_lc(self, x)


def solve_lc(system: LimitCycleSystem, lc: LimitCycleParam, *, threshold: float = CERTIFY_THRESHOLD):
    phi = lstsq_min_norm(system.matrix, system.rhs)
    if not np.all(np.isfinite(phi)):
        raise FloatingPointError("non-finite Fourier-Bernstein coefficients")
    resid = float(np.linalg.norm(system.matrix @ phi - system.rhs) / np.linalg.norm(system.rhs))
    K = 2 * system.n_bar + 1
    full = np.zeros((K, system.degree + 1), dtype=complex)
    rows = np.flatnonzero(harmonics(system.n_bar) % system.harmonic_stride == 0)
    full[rows] = phi.reshape(len(rows), system.degree + 1)
    lc = lc.with_floquet(system.eigenvalue)
    return FourierBernsteinEigenfunction(
        lc, system.n_bar, system.degree, system.eigenvalue, full, system.c2, resid, system.harmonic_stride,
        resid < threshold, threshold,
    )


def eval_lc(ef: FourierBernsteinEigenfunction, x, *, tol: float = 1e-9):
    theta, y = ef.lc.to_polar(x)
    bad = (y < -tol) | (y > 1 + tol)
    if np.any(bad):
        raise AnnulusError(np.asarray(y)[bad] if np.ndim(y) else y)
    return ef.eval_polar(theta, y)


def solve_limit_cycle_eigenfunction(
    system,
    lc: LimitCycleParam,
    lam: complex,
    n_bar: int,
    s: int,
    *,
    s_prime: int | None = None,
    harmonic_stride: int = 1,
    threshold: float = CERTIFY_THRESHOLD,
    weight: float = 1.0,
) -> FourierBernsteinEigenfunction:
    """Project, build the boundary data, assemble and solve in one call."""
    proj = project_field(system, lc, n_bar, s_prime) if s_prime is not None else auto_project(system, lc, n_bar)
    c2 = boundary_c2(system, lc, lam, n_bar)
    lcs = assemble_lc_system(proj, c2, lam, n_bar, s, harmonic_stride=harmonic_stride, delta=lc.delta, weight=weight)
    return solve_lc(lcs, lc, threshold=threshold)


def pde_residual_grid(system, ef: FourierBernsteinEigenfunction, n_theta: int, n_y: int, step: float = 1e-5):
    """Finite-difference residual ``F_y phi_y + F_theta phi_theta - lambda phi`` on a uniform grid."""
    theta = 2 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
    y = np.linspace(step, 1 - step, n_y)
    T, Y = np.meshgrid(theta, y, indexing="ij")
    f_t, f_y = polar_dynamics(system, ef.lc, T, Y)
    phi = ef.eval_polar(T, Y)
    d_y = (ef.eval_polar(T, Y + step) - ef.eval_polar(T, Y - step)) / (2 * step)
    d_t = (ef.eval_polar(T + step, Y) - ef.eval_polar(T - step, Y)) / (2 * step)
    return f_y * d_y + f_t * d_t - ef.eigenvalue * phi, phi
