"""Vector fields, fixed points, Jacobian spectra, box maps and limit cycles."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .integrate import ATOL, RTOL, integrate_flow
from .poly import MonomialPoly

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    pass


class SingularJacobianError(RuntimeError):
    pass


class DefectiveJacobianError(RuntimeError):
    pass


class PolarDomainError(ValueError):
    pass


class LimitCycleError(RuntimeError):
    pass


class NotStarShapedError(LimitCycleError):
    pass


class FloquetError(RuntimeError):
    pass


# ---------------------------------------------------------------- systems


class _CompiledPoly:
    """Dense exponent/coefficient tables for fast vectorized evaluation."""

    def __init__(self, polys: Sequence[MonomialPoly]):
        n = polys[0].dimension
        keys = sorted({k for p in polys for k in p.terms})
        self.exps = np.array(keys, dtype=int).reshape(-1, n)
        self.coef = np.array([[p.coefficient(k).real for k in keys] for p in polys]).reshape(len(polys), -1)
        self.center = np.asarray(polys[0].center)
        self.maxdeg = self.exps.max(axis=0) if len(keys) else np.zeros(n, dtype=int)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        d = x - self.center
        mono = np.ones(d.shape[:-1] + (self.exps.shape[0],))
        for i in range(d.shape[-1]):
            if self.maxdeg[i] == 0:
                continue
            pw = d[..., i, None] ** np.arange(self.maxdeg[i] + 1)
            mono = mono * pw[..., self.exps[:, i]]
        return mono @ self.coef.T


@dataclass(frozen=True)
class DynamicalSystem:
    """Polynomial field ``xdot = F(x)``; one :class:`MonomialPoly` per component."""

    components: tuple[MonomialPoly, ...]
    name: str = ""

    def __post_init__(self):
        comps = tuple(p.recenter((0.0,) * p.dimension) if any(p.center) else p for p in self.components)
        n = len(comps)
        for p in comps:
            if p.dimension != n:
                raise ValueError(f"component of dimension {p.dimension} in a {n}-dimensional system")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "_rhs", _CompiledPoly(comps))
        jac = [[p.partial_derivative(j) for j in range(n)] for p in comps]
        object.__setattr__(self, "_jac_polys", jac)
        object.__setattr__(self, "_jac", _CompiledPoly([q for row in jac for q in row]))

    @property
    def dimension(self) -> int:
        return len(self.components)

    is_polynomial = True

    def rhs(self, x) -> np.ndarray:
        return self._rhs(np.asarray(x, dtype=float))

    def __call__(self, x) -> np.ndarray:
        return self.rhs(x)

    def jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        n = self.dimension
        return self._jac(x).reshape(x.shape[:-1] + (n, n))

    def jacobian_polys(self) -> list[list[MonomialPoly]]:
        return self._jac_polys

    def axis_degree(self) -> int:
        """Largest per-axis degree over all components."""
        return max(p.axis_degree(i) for p in self.components for i in range(self.dimension))

    def time_reversed(self) -> "DynamicalSystem":
        return DynamicalSystem(tuple(-p for p in self.components), self.name + " (reversed)")


@dataclass(frozen=True)
class CallableSystem:
    """Non-polynomial field given by vectorized ``rhs`` and ``jac`` callables.

    Accepted wherever only evaluation is needed (integration, limit cycles,
    polar dynamics, Floquet analysis).
    """

    dimension: int
    rhs_fn: Callable[[np.ndarray], np.ndarray]
    jac_fn: Callable[[np.ndarray], np.ndarray]
    name: str = ""

    is_polynomial = False

    def rhs(self, x) -> np.ndarray:
        return self.rhs_fn(np.asarray(x, dtype=float))

    def __call__(self, x) -> np.ndarray:
        return self.rhs(x)

    def jacobian(self, x) -> np.ndarray:
        return self.jac_fn(np.asarray(x, dtype=float))

    @classmethod
    def from_sympy(cls, exprs, symbols, name: str = "") -> "CallableSystem":
        import sympy

        exprs = [sympy.sympify(e) for e in exprs]
        n = len(symbols)
        jac = sympy.Matrix(exprs).jacobian(sympy.Matrix(symbols))
        f_raw = sympy.lambdify(symbols, exprs, "numpy")
        j_raw = sympy.lambdify(symbols, [jac[i, j] for i in range(n) for j in range(n)], "numpy")

        def rhs(x):
            cols = [x[..., i] for i in range(n)]
            return np.stack([np.broadcast_to(v, x.shape[:-1]) for v in f_raw(*cols)], axis=-1).astype(float)

        def jac_fn(x):
            cols = [x[..., i] for i in range(n)]
            vals = [np.broadcast_to(v, x.shape[:-1]) for v in j_raw(*cols)]
            return np.stack(vals, axis=-1).reshape(x.shape[:-1] + (n, n)).astype(float)

        return cls(n, rhs, jac_fn, name)


# ---------------------------------------------------------------- fixed points


def find_fixed_point(system, guess, *, tol: float = 1e-12, max_iter: int = 100) -> np.ndarray:
    """Newton iteration on ``F(x) = 0``."""
    x = np.asarray(guess, dtype=float).copy()
    for _ in range(max_iter):
        fx = system.rhs(x)
        if np.max(np.abs(fx)) < tol:
            return x
        J = system.jacobian(x)
        if np.linalg.cond(J) > 1e14:
            raise SingularJacobianError(f"singular Jacobian at {x}")
        x = x - np.linalg.solve(J, fx)
    if np.max(np.abs(system.rhs(x))) < tol:
        return x
    raise ConvergenceError(f"Newton did not converge in {max_iter} iterations from {guess}")


@dataclass(frozen=True)
class SpectrumReport:
    fixed_point: np.ndarray
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    left_eigenvectors: np.ndarray  # column i pairs with eigenvalues[i]
    nonresonant: bool
    max_order: int

    def residuals(self) -> np.ndarray:
        W = self.left_eigenvectors
        return np.linalg.norm(self.jacobian.T @ W - W * self.eigenvalues, axis=0)

    def conjugate_index(self, i: int, tol: float = 1e-10) -> int | None:
        """Index of the eigenvalue conjugate to ``eigenvalues[i]`` (None when real)."""
        lam = self.eigenvalues[i]
        if abs(lam.imag) <= tol:
            return None
        for j, mu in enumerate(self.eigenvalues):
            if j != i and abs(mu - lam.conjugate()) <= tol * max(1.0, abs(lam)):
                return j
        return None


def _normalize_eigvec(w: np.ndarray) -> np.ndarray:
    w = w / np.linalg.norm(w)
    nz = np.flatnonzero(np.abs(w) > 1e-12)
    lead = w[nz[0]]
    return w * (abs(lead) / lead)


def jacobian_spectrum(system, x_star, *, max_order: int = 10) -> SpectrumReport:
    """Eigenvalues and unit left eigenvectors of the Jacobian at ``x_star``.

    Sorted by descending real part, ties broken by ascending imaginary part.
    """
    x_star = np.asarray(x_star, dtype=float)
    J = np.asarray(system.jacobian(x_star), dtype=float)
    lam, W = np.linalg.eig(J.T)
    if np.linalg.cond(W) > 1e10:
        raise DefectiveJacobianError(f"Jacobian at {x_star} is (nearly) defective")
    order = sorted(range(len(lam)), key=lambda i: (-round(lam[i].real, 12), round(lam[i].imag, 12)))
    lam = lam[order].astype(complex)
    W = np.stack([_normalize_eigvec(W[:, i].astype(complex)) for i in order], axis=1)
    return SpectrumReport(x_star, J, lam, W, check_nonresonance(lam, max_order), max_order)


def _combinations(n: int, max_order: int):
    for total in range(2, max_order + 1):
        for c in itertools.combinations_with_replacement(range(n), total):
            yield np.bincount(c, minlength=n)


def resonance_gap(eigenvalues, order: int) -> float:
    """Smallest ``|lambda_i - sum c_k lambda_k|`` over combinations of total weight ``order``."""
    lam = np.asarray(eigenvalues, dtype=complex)
    best = np.inf
    for c in itertools.combinations_with_replacement(range(len(lam)), order):
        combo = np.bincount(c, minlength=len(lam)) @ lam
        best = min(best, float(np.min(np.abs(lam - combo))))
    return best


def check_nonresonance(eigenvalues, max_order: int, tol: float = 1e-8) -> bool:
    """True when no ``lambda_i = sum c_k lambda_k`` with ``2 <= sum c <= max_order``."""
    if max_order < 2:
        raise ValueError("max_order must be at least 2")
    lam = np.asarray(eigenvalues, dtype=complex)
    for c in _combinations(len(lam), max_order):
        if np.any(np.abs(lam - c @ lam) < tol):
            return False
    return True


# ---------------------------------------------------------------- boxes


@dataclass(frozen=True)
class BoxMap:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
            raise ValueError("box bounds must be finite and of equal length")
        if not np.all(hi > lo):
            raise ValueError("upper bounds must exceed lower bounds")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unit(cls, n: int) -> "BoxMap":
        return cls(np.zeros(n), np.ones(n))

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def dimension(self) -> int:
        return len(self.lower)

    def forward(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lower) / self.width

    def inverse(self, u) -> np.ndarray:
        return self.lower + self.width * np.asarray(u, dtype=float)

    def contains(self, x, tol: float = 0.0) -> np.ndarray:
        u = self.forward(x)
        return np.all((u >= -tol) & (u <= 1 + tol), axis=-1)


def pull_back_field(system: DynamicalSystem, box: BoxMap) -> DynamicalSystem:
    """Field in box coordinates ``u``: ``udot_l = F_l(lower + width * u) / width_l``."""
    comps = tuple(
        p.compose_affine(box.lower, box.width).scale(1.0 / box.width[l]) for l, p in enumerate(system.components)
    )
    return DynamicalSystem(comps, system.name + " [box]")


# ---------------------------------------------------------------- limit cycles


@dataclass(frozen=True)
class LimitCycleParam:
    """Star-shaped planar cycle ``x = center + rho(theta) (cos, sin)``.

    ``thetas``/``radii`` are uniform samples of the polar radius; the
    annulus coordinates are ``x = x_gamma(theta) + (y + delta) e_r(theta)``
    with ``e_r`` of constant norm ``er_norm`` along the polar direction.
    """

    period: float
    thetas: np.ndarray
    radii: np.ndarray
    center: np.ndarray
    delta: float = 0.0
    er_norm: float = 2.0
    section_point: np.ndarray | None = None
    direction: int = 1  # sign of dtheta/dt along the orbit
    floquet_exponent: complex | None = None
    _spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        th = np.append(self.thetas, 2 * np.pi)
        r = np.append(self.radii, self.radii[0])
        object.__setattr__(self, "_spline", CubicSpline(th, r, bc_type="periodic"))

    @property
    def samples(self) -> list[tuple[float, np.ndarray]]:
        return [(t, self.point(t)) for t in self.thetas]

    def radius(self, theta, nu: int = 0):
        return self._spline(np.mod(theta, 2 * np.pi), nu)

    def point(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        r = self.radius(theta)
        return self.center + np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)

    def dpoint(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        r, dr = self.radius(theta), self.radius(theta, 1)
        c, s = np.cos(theta), np.sin(theta)
        return np.stack([dr * c - r * s, dr * s + r * c], axis=-1)

    def to_polar(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Cartesian point(s) to annulus coordinates ``(theta, y)``."""
        d = np.asarray(x, dtype=float) - self.center
        theta = np.mod(np.arctan2(d[..., 1], d[..., 0]), 2 * np.pi)
        y = (np.hypot(d[..., 0], d[..., 1]) - self.radius(theta)) / self.er_norm - self.delta
        return theta, y

    def from_polar(self, theta, y) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        dist = self.radius(theta) + (np.asarray(y) + self.delta) * self.er_norm
        return self.center + np.stack([dist * np.cos(theta), dist * np.sin(theta)], axis=-1)

    def with_floquet(self, exponent: complex) -> "LimitCycleParam":
        return replace(self, floquet_exponent=exponent)

    def with_annulus(self, *, delta: float | None = None, er_norm: float | None = None) -> "LimitCycleParam":
        return replace(
            self,
            delta=self.delta if delta is None else delta,
            er_norm=self.er_norm if er_norm is None else er_norm,
        )


def polar_dynamics(system, lc: LimitCycleParam, theta, y):
    """Annulus-coordinate velocities ``(F_theta, F_y)`` at ``(theta, y)``."""
    theta = np.asarray(theta, dtype=float)
    y = np.asarray(y, dtype=float)
    theta, y = np.broadcast_arrays(theta, y)
    dist = lc.radius(theta) + (y + lc.delta) * lc.er_norm
    if np.any(dist <= 0):
        raise PolarDomainError("annulus reaches the cycle center (nonpositive radial distance)")
    c, s = np.cos(theta), np.sin(theta)
    x = lc.center + np.stack([dist * c, dist * s], axis=-1)
    F = system.rhs(x)
    unit_r = np.stack([c, s], axis=-1)
    unit_t = np.stack([-s, c], axis=-1)
    f_theta = np.sum(F * unit_t, axis=-1) / dist
    f_y = (np.sum(F * unit_r, axis=-1) - f_theta * lc.radius(theta, 1)) / lc.er_norm
    return f_theta, f_y


def _section_crossings(system, x0, t_max, center):
    def ev(_t, x):
        return x[1] - center[1]


    sol = solve_ivp(lambda _t, x: system.rhs(x), (0, t_max), x0, method="RK45", rtol=RTOL, atol=ATOL, events=ev)
    if sol.status == -1:
        raise LimitCycleError(f"integration failed: {sol.message}")
    ts, ys = sol.t_events[0], sol.y_events[0]
    keep = [i for i in range(len(ts)) if ys[i][0] > center[0] and ts[i] > 0]
    return ts[keep], ys[keep], sol.y[:, -1]


def find_limit_cycle(
    system,
    guess,
    *,
    center=(0.0, 0.0),
    delta: float = 0.0,
    er_norm: float | None = None,
    n_samples: int = 4096,
    max_time: float = 2000.0,
    tol: float = 1e-11,
) -> LimitCycleParam:
    """Locate a stable star-shaped cycle by iterating the return map on the positive x1-ray."""
    if system.dimension != 2:
        raise LimitCycleError("limit cycles are supported for planar systems only")
    center = np.asarray(center, dtype=float)
    x = np.asarray(guess, dtype=float)
    elapsed = 0.0
    prev = None
    period = None
    chunk = 50.0
    while elapsed < max_time:
        ts, ys, x_end = _section_crossings(system, x, chunk, center)
        elapsed += chunk
        if len(ts) < 2:
            if len(ts) == 0 and elapsed >= max_time:
                break
            x = x_end
            chunk *= 2
            continue
        p, q = ys[-2], ys[-1]
        period = ts[-1] - ts[-2]
        if prev is not None and np.linalg.norm(q - p) < tol * max(1.0, np.linalg.norm(q)):
            break
        prev = q
        if np.linalg.norm(q - p) < tol * max(1.0, np.linalg.norm(q)):
            break
        x = q
    else:
        raise LimitCycleError(f"no convergent return to the section within t = {max_time:g}")
    if period is None:
        raise LimitCycleError(f"no convergent return to the section within t = {max_time:g}")

    x0 = ys[-1]
    # one period with dense output; polar angle must be monotone along it
    _, dense = integrate_flow(system, x0, period, dense=True)
    t_fine = np.linspace(0, period, 16 * n_samples + 1)
    pts = dense(t_fine).T - center
    ang = np.unwrap(np.arctan2(pts[:, 1], pts[:, 0]))
    dang = np.diff(ang)
    direction = 1 if ang[-1] > ang[0] else -1
    if np.any(direction * dang <= 0) or abs(abs(ang[-1] - ang[0]) - 2 * np.pi) > 1e-6:
        raise NotStarShapedError("polar angle is not monotone along the orbit")

    thetas = 2 * np.pi * np.arange(n_samples) / n_samples
    radii = np.empty(n_samples)
    # theta(t) measured from the section (angle 0), increasing in `direction`
    rel = direction * (ang - ang[0])
    for j, th in enumerate(thetas):
        target = th if direction == 1 else (2 * np.pi - th) % (2 * np.pi)
        if target == 0:
            radii[j] = np.linalg.norm(x0 - center)
            continue
        i = np.searchsorted(rel, target)
        t_lo, t_hi = t_fine[max(i - 2, 0)], t_fine[min(i + 1, len(t_fine) - 1)]
        tj = brentq(lambda t: _angle_residual(dense, t, center, th), t_lo, t_hi, xtol=1e-14)
        radii[j] = np.linalg.norm(dense(tj) - center)
    if er_norm is None:
        er_norm = 2.0 * float(np.max(radii))
    lc = LimitCycleParam(period, thetas, radii, center, delta, er_norm, x0.copy(), direction)
    back = integrate_flow(system, x0, period)
    if np.linalg.norm(back - x0) > 1e-8 * max(1.0, np.linalg.norm(x0)):
        raise LimitCycleError(f"orbit does not close: return error {np.linalg.norm(back - x0):.2e}")
    return lc


def _angle_residual(dense, t, center, theta):
    d = dense(t) - center
    a = np.arctan2(d[1], d[0])
    # signed difference in (-pi, pi]
    return (a - theta + np.pi) % (2 * np.pi) - np.pi


def monodromy(system, lc: LimitCycleParam, *, rtol: float = RTOL, atol: float = ATOL):
    """Monodromy matrix over one period and the integral of ``tr J`` along the orbit."""
    n = system.dimension
    x0 = lc.section_point if lc.section_point is not None else lc.point(0.0)

    def rhs(_t, z):
        x = z[:n]
        psi = z[n : n + n * n].reshape(n, n)
        J = system.jacobian(x)
        return np.concatenate([system.rhs(x), (J @ psi).ravel(), [np.trace(J)]])

    z0 = np.concatenate([x0, np.eye(n).ravel(), [0.0]])
    sol = solve_ivp(rhs, (0.0, lc.period), z0, method="RK45", rtol=rtol, atol=atol)
    if sol.status != 0:
        raise FloquetError(f"variational integration failed: {sol.message}")
    z = sol.y[:, -1]
    return z[n : n + n * n].reshape(n, n), z[-1]


def floquet_exponents(system, lc: LimitCycleParam, *, trivial_tol: float = 1e-4) -> list[complex]:
    """Nontrivial Floquet exponents ``log(mu) / T`` of the cycle.

    The multiplier closest to 1 is the trivial (flow) direction and is
    dropped. In the plane the remaining exponent follows from Liouville's
    formula, ``log det Psi(T) = int tr J dt``, which stays accurate when the
    contracting multiplier is far below the integration tolerance.
    """
    psi, tr_int = monodromy(system, lc)
    mu = np.linalg.eigvals(psi).astype(complex)
    i_triv = int(np.argmin(np.abs(mu - 1)))
    if abs(mu[i_triv] - 1) > trivial_tol:
        raise FloquetError(f"trivial multiplier {mu[i_triv]:.6g} deviates from 1; cycle or integration inaccurate")
    if system.dimension == 2:
        return [complex((tr_int - np.log(mu[i_triv].real)) / lc.period)]
    rest = np.delete(mu, i_triv)
    return [complex(np.log(m) / lc.period) for m in rest]


def trivial_exponent(system, lc: LimitCycleParam) -> complex:
    psi, _ = monodromy(system, lc)
    mu = np.linalg.eigvals(psi).astype(complex)
    return complex(np.log(mu[np.argmin(np.abs(mu - 1))]) / lc.period)
