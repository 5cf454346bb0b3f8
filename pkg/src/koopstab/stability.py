"""Lyapunov functions, decrease regions, basin estimates and trajectory checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .bernstein_fp import BernsteinEigenfunction
from .integrate import EscapeError, integrate_batch, integrate_flow  # noqa: F401  (re-exported)
from .limit_cycle import FourierBernsteinEigenfunction
from .taylor import TaylorEigenfunction

DELTA = 1e-3
SEMIGROUP_FLOOR = 1e-9
ENVELOPE_SLACK = 1e-3


# ---------------------------------------------------------------- member evaluation


def valid_mask(ef, x, tol: float = 1e-12) -> np.ndarray:
    """Where ``ef`` may be evaluated: its box, its annulus, or everywhere."""
    x = np.asarray(x, dtype=float)
    if isinstance(ef, BernsteinEigenfunction):
        return ef.box.contains(x, tol=tol)
    if isinstance(ef, FourierBernsteinEigenfunction):
        _, y = ef.lc.to_polar(x)
        return (y >= -ef.lc.delta - 1e-9) & (y <= 1 + 1e-9)
    return np.ones(x.shape[:-1], dtype=bool)


def evaluate(ef, x) -> np.ndarray:
    """Complex values of ``ef`` at ``x``; NaN where ``ef`` is not valid."""
    x = np.asarray(x, dtype=float)
    ok = valid_mask(ef, x)
    out = np.full(x.shape[:-1], np.nan + 0j, dtype=complex)
    if np.any(ok):
        if isinstance(ef, FourierBernsteinEigenfunction):
            th, y = ef.lc.to_polar(x[ok])
            out[ok] = ef.eval_polar(th, y)
        else:
            out[ok] = ef(x[ok])
    return out


def eigenvalue_of(ef) -> complex:
    return complex(ef.eigenvalue)


def _is_conjugate_pair(efs) -> bool:
    if len(efs) != 2:
        return False
    a, b = (eigenvalue_of(e) for e in efs)
    return a.imag != 0 and abs(a - b.conjugate()) < 1e-10 * max(1.0, abs(a))


# ---------------------------------------------------------------- Lyapunov function


@dataclass(frozen=True)
class LyapunovFunction:
    """``V(x) = (sum_i |phi_i(x)|^p)^(1/p)``."""

    eigenfunctions: tuple
    p: int
    dominant_rate: float
    fixed_point: np.ndarray | None = None

    def __call__(self, x):
        return lyapunov_value(self, x)


def make_lyapunov(eigenfunctions, p: int | None = None) -> LyapunovFunction:
    """Default ``p = 2``; a lone complex-conjugate pair keeps one member with ``p = 1``."""
    efs = tuple(eigenfunctions)
    if not efs:
        raise ValueError("need at least one eigenfunction")
    if p is None:
        if _is_conjugate_pair(efs):
            efs, p = efs[:1], 1
        else:
            p = 2
    if p < 1:
        raise ValueError("p must be a positive integer")
    rate = max(eigenvalue_of(e).real for e in efs)
    fp = None
    e0 = efs[0]
    if isinstance(e0, TaylorEigenfunction):
        fp = np.asarray(e0.center, dtype=float)
    elif isinstance(e0, BernsteinEigenfunction):
        fp = e0.fixed_point
    return LyapunovFunction(efs, int(p), float(rate), fp)


def lyapunov_value(V: LyapunovFunction, x, *, with_flag: bool = False):
    """p-norm of member magnitudes; NaN (and flag) where any member is invalid."""
    x = np.asarray(x, dtype=float)
    mags = np.stack([np.abs(evaluate(e, x)) for e in V.eigenfunctions], axis=0)
    val = np.sum(mags**V.p, axis=0) ** (1.0 / V.p)
    if with_flag:
        return val, np.isnan(val)
    return val


# ---------------------------------------------------------------- lattices


@dataclass(frozen=True)
class GridSpec:
    """Rectangular lattice; ``shape[i]`` samples along axis ``i`` (last axis fastest)."""

    lower: tuple
    upper: tuple
    shape: tuple

    def __post_init__(self):
        lo, hi = np.asarray(self.lower, float), np.asarray(self.upper, float)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)) and np.all(hi > lo)):
            raise ValueError("grid bounds must be finite with upper > lower")
        if len(self.shape) != len(lo) or min(self.shape) < 2:
            raise ValueError("need at least two samples per axis")

    @property
    def axes(self) -> list[np.ndarray]:
        return [np.linspace(a, b, m) for a, b, m in zip(self.lower, self.upper, self.shape)]

    @property
    def spacing(self) -> np.ndarray:
        return (np.asarray(self.upper, float) - np.asarray(self.lower, float)) / (np.asarray(self.shape) - 1)

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def nearest_index(self, x) -> tuple[int, ...]:
        idx = np.rint((np.asarray(x, float) - np.asarray(self.lower, float)) / self.spacing).astype(int)
        return tuple(np.clip(idx, 0, np.asarray(self.shape) - 1))


@dataclass(frozen=True)
class DecreaseRegion:
    grid: GridSpec
    values: np.ndarray  # V on the lattice
    advanced: np.ndarray  # V after flowing for delta
    decreasing: np.ndarray
    delta: float

    @property
    def rate(self) -> np.ndarray:
        """Finite-difference ``-dV/dt``."""
        return (self.values - self.advanced) / self.delta


def decrease_region(V: LyapunovFunction, system, grid: GridSpec, *, delta: float = DELTA, x_star=None) -> DecreaseRegion:
    """Mark lattice points with ``V(flow_delta(x)) < V(x)``; the fixed point itself counts as decreasing."""
    pts = grid.points()
    flat = pts.reshape(-1, pts.shape[-1])
    v0 = lyapunov_value(V, flat)
    res = integrate_batch(system, flat, [delta])
    v1 = np.full_like(v0, np.nan)
    ok = ~res.escaped
    v1[ok] = lyapunov_value(V, res.final[ok])
    with np.errstate(invalid="ignore"):
        dec = v1 < v0
    x_star = V.fixed_point if x_star is None else x_star
    if x_star is not None:
        at_fp = np.linalg.norm(flat - np.asarray(x_star), axis=1) < 1e-12
        dec |= at_fp & np.isfinite(v0)
    shape = grid.shape
    return DecreaseRegion(grid, v0.reshape(shape), v1.reshape(shape), dec.reshape(shape), delta)


# ---------------------------------------------------------------- basin estimate

OUTSIDE, INSIDE, BOUNDARY = 0, 1, 2


@dataclass(frozen=True)
class BasinEstimate:
    level: float
    grid: GridSpec
    flags: np.ndarray  # OUTSIDE / INSIDE / BOUNDARY per lattice point
    certified: bool
    decrease_margin: float
    region: DecreaseRegion = field(repr=False)

    @property
    def inside(self) -> np.ndarray:
        return self.flags != OUTSIDE

    def area(self) -> float:
        return float(np.sum(self.inside) * np.prod(self.grid.spacing))

    def contains(self, V: LyapunovFunction, x) -> np.ndarray:
        """Point-wise membership: ``V(x) < c`` and nearest lattice point in the component."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        v = lyapunov_value(V, x)
        idx = np.rint((x - np.asarray(self.grid.lower)) / self.grid.spacing).astype(int)
        inb = np.all((idx >= 0) & (idx < np.asarray(self.grid.shape)), axis=1)
        idx = np.clip(idx, 0, np.asarray(self.grid.shape) - 1)
        on = self.inside[tuple(idx.T)]
        with np.errstate(invalid="ignore"):
            return inb & on & (v < self.level)


def _component(values, level, seed):
    with np.errstate(invalid="ignore"):
        sub = values < level
    if not sub[seed]:
        return None
    structure = ndimage.generate_binary_structure(values.ndim, 1)  # 4-connectivity in 2D
    labels, _ = ndimage.label(sub, structure=structure)
    return labels == labels[seed]


def _admissible(comp, safe) -> bool:
    return comp is not None and bool(np.all(safe[comp]))


def basin_estimate(
    V: LyapunovFunction,
    system,
    grid: GridSpec,
    *,
    delta: float = DELTA,
    x_star=None,
    region: DecreaseRegion | None = None,
) -> BasinEstimate:
    """Largest ``c`` whose connected ``V < c`` component around ``x*`` sits in the decrease region.

    The component must keep a one-cell margin: every 4-neighbour of a member
    is decreasing and inside the lattice.
    """
    region = decrease_region(V, system, grid, delta=delta, x_star=x_star) if region is None else region
    x_star = V.fixed_point if x_star is None else np.asarray(x_star, float)
    if x_star is None:
        raise ValueError("basin estimate needs the fixed point")
    seed = grid.nearest_index(x_star)
    structure = ndimage.generate_binary_structure(len(grid.shape), 1)
    padded = np.pad(region.decreasing & np.isfinite(region.values), 1, constant_values=False)
    safe = ndimage.binary_erosion(padded, structure=structure)[tuple(slice(1, -1) for _ in grid.shape)]

    levels = np.unique(region.values[np.isfinite(region.values)])
    # largest lattice value whose V < c component (c just above it) is admissible
    lo, hi = -1, len(levels) - 1
    best = None
    while lo < hi:
        mid = (lo + hi + 1) // 2
        c = levels[mid] * (1 + 1e-12) + 1e-300
        comp = _component(region.values, c, seed)
        if _admissible(comp, safe):
            lo, best = mid, (c, comp)
        else:
            hi = mid - 1
    flags = np.zeros(grid.shape, dtype=np.int8)
    if best is None:
        return BasinEstimate(0.0, grid, flags, False, float("nan"), region)
    c, comp = best
    flags[comp] = INSIDE
    edge = comp & ~ndimage.binary_erosion(comp, structure=structure, border_value=0)
    flags[edge] = BOUNDARY
    margin = float(np.min(region.rate[comp & (region.values > 0)])) if np.any(comp & (region.values > 0)) else 0.0
    return BasinEstimate(float(c), grid, flags, bool(c > 0), margin, region)


def sample_basin(basin: BasinEstimate, V: LyapunovFunction, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform rejection samples from the certified set."""
    if not basin.certified:
        raise ValueError("basin estimate is not certified")
    idx = np.argwhere(basin.inside)
    sp = basin.grid.spacing
    lo = np.asarray(basin.grid.lower) + (idx.min(axis=0) - 1) * sp
    hi = np.asarray(basin.grid.lower) + (idx.max(axis=0) + 1) * sp
    out = []
    n = 0
    while n < count:
        x = rng.uniform(lo, hi, size=(4 * count, len(lo)))
        x = x[basin.contains(V, x)]
        out.append(x)
        n += len(x)
    return np.concatenate(out)[:count]


def converges(system, points, x_star, t_final: float, tol: float = 1e-4) -> np.ndarray:
    """Whether each trajectory is within ``tol`` of ``x_star`` at ``t_final``."""
    res = integrate_batch(system, points, [t_final])
    d = np.linalg.norm(res.final - np.asarray(x_star), axis=1)
    return ~res.escaped & (d < tol)


# ---------------------------------------------------------------- verification


@dataclass(frozen=True)
class SemigroupReport:
    max_error: float
    n_used: int
    n_skipped: int
    times: np.ndarray

    def passed(self, tol: float) -> bool:
        return self.n_used > 0 and self.max_error < tol


def verify_semigroup(ef, lam, system, points, horizon: float, *, n_checkpoints: int = 11,
                     floor: float = SEMIGROUP_FLOOR, rtol: float | None = None,
                     atol: float | None = None) -> SemigroupReport:
    """``max |phi(flow_t x) - e^(lambda t) phi(x)| / max(|phi(x)|, floor)`` over points and checkpoints.

    Points whose trajectories escape or leave the valid region are skipped.
    ``rtol``/``atol`` override the integrator tolerances when the check needs
    to resolve errors near the default integration error.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    times = np.linspace(0.0, horizon, n_checkpoints)
    tol = {k: v for k, v in (("rtol", rtol), ("atol", atol)) if v is not None}
    res = integrate_batch(system, pts, times, **tol)
    states = res.states  # (M, K, N)
    ok = ~res.escaped & np.all(np.isfinite(states), axis=(1, 2))
    ok &= np.all(valid_mask(ef, np.where(np.isfinite(states), states, 0.0)), axis=1)
    if not np.any(ok):
        return SemigroupReport(float("nan"), 0, len(pts), times)
    s = states[ok]
    vals = evaluate(ef, s)  # (M', K)
    base = vals[:, :1]
    pred = np.exp(complex(lam) * times)[None, :] * base
    err = np.abs(vals - pred) / np.maximum(np.abs(base), floor)
    return SemigroupReport(float(np.max(err)), int(ok.sum()), int((~ok).sum()), times)


def decay_envelope_ratio(V: LyapunovFunction, system, points, horizon: float, *, n_checkpoints: int = 11,
                         rate: float | None = None) -> float:
    """``max V(flow_t x) / (e^(rate t) V(x))`` over valid points and checkpoints."""
    rate = V.dominant_rate if rate is None else rate
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    times = np.linspace(0.0, horizon, n_checkpoints)
    res = integrate_batch(system, pts, times)
    ok = ~res.escaped & np.all(np.isfinite(res.states), axis=(1, 2))
    s = res.states[ok]
    v = lyapunov_value(V, s)
    ok2 = np.all(np.isfinite(v), axis=1) & (v[:, 0] > 0)
    v = v[ok2]
    if len(v) == 0:
        return float("nan")
    bound = np.exp(rate * times)[None, :] * v[:, :1]
    return float(np.max(v / bound))


def verify_decay_envelope(V: LyapunovFunction, system, points, horizon: float, *, n_checkpoints: int = 11,
                          rate: float | None = None) -> bool:
    """``V(flow_t x) <= e^(Re lambda_1 t) V(x)`` within a factor ``1 + 1e-3`` at every checkpoint."""
    r = decay_envelope_ratio(V, system, points, horizon, n_checkpoints=n_checkpoints, rate=rate)
    return bool(np.isfinite(r) and r <= 1 + ENVELOPE_SLACK)
