"""Koopman eigenfunctions as Taylor series about a hyperbolic fixed point.

Coefficients are computed order by order.  Writing ``L phi = F . grad phi``,
the linear part of ``F`` maps homogeneous degree ``s`` to itself (the matrix
``H_s``) while every field term of degree ``d >= 2`` pushes degree ``s`` up to
``s + d - 1``.  Collecting those pushes from already-solved orders gives the
forcing ``V_s`` and the order-``s`` block solves ``(H_s - lambda) Phi_s = -V_s``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.signal

from .poly import MonomialPoly, monomials_of_degree
from .system import SpectrumReport, resonance_gap


class ResonanceError(RuntimeError):
    def __init__(self, order: int, detail: str = ""):
        super().__init__(f"resonant or near-singular order-{order} system {detail}".strip())
        self.order = order


class NearResonanceWarning(RuntimeWarning):
    pass


def _degree_mask(shape: tuple[int, ...], max_total: int) -> np.ndarray:
    grids = np.indices(shape)
    return grids.sum(axis=0) <= max_total


@dataclass(frozen=True)
class TaylorEigenfunction:
    """``phi(x) = sum_k a_k prod (x_i - center_i)^k_i`` stored as a dense array ``a[k1, ..., kN]``."""

    center: np.ndarray
    eigenvalue: complex
    max_order: int
    coeff_array: np.ndarray
    gradient_seed: np.ndarray

    @property
    def dimension(self) -> int:
        return len(self.center)

    @property
    def coeffs(self) -> dict[tuple[int, ...], complex]:
        out = {}
        for s in range(self.max_order + 1):
            for k in monomials_of_degree(self.dimension, s):
                out[k] = complex(self.coeff_array[k])
        return out

    def order_block(self, s: int) -> np.ndarray:
        return np.array([self.coeff_array[k] for k in monomials_of_degree(self.dimension, s)])

    def max_abs_by_order(self) -> np.ndarray:
        return np.array([np.max(np.abs(self.order_block(s))) for s in range(self.max_order + 1)])

    def as_poly(self, order: int | None = None) -> MonomialPoly:
        order = self.max_order if order is None else order
        terms = {k: v for k, v in self.coeffs.items() if sum(k) <= order}
        return MonomialPoly(self.dimension, terms, tuple(self.center))

    def conj(self) -> "TaylorEigenfunction":
        return TaylorEigenfunction(
            self.center, complex(self.eigenvalue).conjugate(), self.max_order, self.coeff_array.conj(), self.gradient_seed.conj()
        )

    def _truncated(self, order):
        if order is None or order >= self.max_order:
            return self.coeff_array
        if order > self.max_order:
            raise ValueError(f"order {order} exceeds max_order {self.max_order}")
        return np.where(_degree_mask(self.coeff_array.shape, order), self.coeff_array, 0)

    def __call__(self, x, order: int | None = None):
        return eval_taylor(self, x, order)

    def gradient(self, x, order: int | None = None) -> np.ndarray:
        """Gradient at point(s) ``x``; trailing axis of the result is N."""
        A = self._truncated(order)
        n = self.dimension
        out = []
        for l in range(n):
            k = np.arange(A.shape[l])
            shape = [1] * n
            shape[l] = -1
            dA = np.roll(A * k.reshape(shape), -1, axis=l)
            idx = [slice(None)] * n
            idx[l] = -1
            dA[tuple(idx)] = 0
            out.append(_eval_dense(dA, self.center, x))
        return np.stack(out, axis=-1)


def _eval_dense(A: np.ndarray, center, x):
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    d = (x - center).reshape(-1, x.shape[-1])
    n = d.shape[1]
    powers = [d[:, i, None] ** np.arange(A.shape[i]) for i in range(n)]
    # contract the last axis first, then proceed toward the first
    out = np.tensordot(A, powers[n - 1], axes=([n - 1], [1]))
    for i in range(n - 2, -1, -1):
        out = np.einsum("...jp,pj->...p", out, powers[i])
    out = out.reshape(x.shape[:-1])
    return complex(out) if scalar else out


def eval_taylor(ef: TaylorEigenfunction, x, order: int | None = None):
    """Partial sum of the series through total degree ``order``."""
    return _eval_dense(ef._truncated(order), ef.center, x)


def _field_terms(system, center):
    """Field terms about ``center`` as (component, exponent, coefficient, degree)."""
    out = []
    for l, p in enumerate(system.components):
        q = p.recenter(tuple(center))
        for k, v in q.terms.items():
            out.append((l, k, v, sum(k)))
    return out


def solve_taylor(
    system,
    spec: SpectrumReport,
    eig_index: int,
    s_max: int,
    *,
    cond_max: float = 1e12,
    warn_tol: float = 1e-4,
) -> TaylorEigenfunction:
    """Taylor coefficients of the eigenfunction seeded by ``spec``'s ``eig_index``-th pair."""
    n = system.dimension
    if not 0 <= eig_index < len(spec.eigenvalues):
        raise IndexError(f"eig_index {eig_index} out of range")
    lam = complex(spec.eigenvalues[eig_index])
    w = np.asarray(spec.left_eigenvectors[:, eig_index], dtype=complex)
    center = np.asarray(spec.fixed_point, dtype=float)
    terms = _field_terms(system, center)
    const = max((abs(v) for _, _, v, d in terms if d == 0), default=0.0)
    if const > 1e-10:
        raise ValueError(f"center is not a fixed point (|F| = {const:.2e})")
    linear = [(l, k, v) for l, k, v, d in terms if d == 1]
    higher = [(l, k, v, d) for l, k, v, d in terms if d >= 2]

    A = np.zeros((s_max + 1,) * n, dtype=complex)
    pending = np.zeros_like(A)  # accumulated forcing V_s, indexed by target monomial

    for s in range(1, s_max + 1):
        monos = monomials_of_degree(n, s)
        pos = {k: i for i, k in enumerate(monos)}
        if s == 1:
            block = w.copy()
        else:
            m = len(monos)
            H = np.zeros((m, m), dtype=complex)
            for j, k in enumerate(monos):
                for l, a, v in linear:
                    if k[l] == 0:
                        continue
                    t = list(k)
                    t[l] -= 1
                    t = tuple(ti + ai for ti, ai in zip(t, a))
                    H[pos[t], j] += v * k[l]
            V = np.array([pending[k] for k in monos])
            gap = resonance_gap(spec.eigenvalues, s)
            if gap < 1e-8:
                raise ResonanceError(s, f"(gap {gap:.2e})")
            if gap < warn_tol:
                warnings.warn(f"near resonance at order {s} (gap {gap:.2e})", NearResonanceWarning, stacklevel=2)
            K = H - lam * np.eye(m)
            if np.linalg.cond(K) > cond_max:
                raise ResonanceError(s, "(ill-conditioned)")
            block = scipy.linalg.lu_solve(scipy.linalg.lu_factor(K), -V)
        for k, v in zip(monos, block):
            A[k] = v
        # push this order through the nonlinear field terms
        for l, a, c, d in higher:
            if s + d - 1 > s_max:
                continue
            for k, v in zip(monos, block):
                if k[l] == 0 or v == 0:
                    continue
                t = tuple(ki - (1 if i == l else 0) + ai for i, (ki, ai) in enumerate(zip(k, a)))
                pending[t] += c * k[l] * v
    A[(0,) * n] = 0.0
    return TaylorEigenfunction(center, lam, s_max, A, w)


def solve_all_taylor(system, spec: SpectrumReport, s_max: int, indices=None) -> list[TaylorEigenfunction]:
    """Solve every requested eigen-index; conjugate partners are obtained by conjugation."""
    indices = range(len(spec.eigenvalues)) if indices is None else indices
    done: dict[int, TaylorEigenfunction] = {}
    for i in indices:
        j = spec.conjugate_index(i)
        if j is not None and j in done:
            done[i] = done[j].conj()
        else:
            done[i] = solve_taylor(system, spec, i, s_max)
    return [done[i] for i in indices]


def _unit_directions(n: int, count: int, seed: int = 0) -> np.ndarray:
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        t = np.linspace(0, np.pi, count, endpoint=False)
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    u = np.random.default_rng(seed).standard_normal((count, n))
    u = np.vstack([np.eye(n), u])
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def order_growth(ef: TaylorEigenfunction, method: str = "directional", n_dirs: int = 720) -> np.ndarray:
    """Per-order size of the homogeneous parts used by :func:`estimate_radius`.

    ``"directional"``: ``max_u |sum_{|k|=s} a_k u^k|`` over real unit directions
    ``u`` (the size of the order-``s`` part on the unit sphere).
    ``"coefficient"``: ``max_{|k|=s} |a_k|``.
    """
    if method == "coefficient":
        return ef.max_abs_by_order()
    if method != "directional":
        raise ValueError(f"unknown method {method!r}")
    n = ef.dimension
    U = _unit_directions(n, n_dirs)
    out = np.zeros(ef.max_order + 1)
    for s in range(ef.max_order + 1):
        monos = monomials_of_degree(n, s)
        block = ef.order_block(s)
        powers = np.prod(U[:, None, :] ** np.array(monos)[None, :, :], axis=2)
        out[s] = np.max(np.abs(powers @ block))
    return out


def estimate_radius(ef: TaylorEigenfunction, method: str = "directional") -> float:
    """Radius of convergence from the geometric growth of the order-``s`` parts.

    A log-linear fit over the top half of orders gives ``size_s ~ C R^-s``.
    The directional size follows the nearest singularity along real
    directions; the coefficient maximum measures the polydisc and is
    typically smaller for mixed monomials.
    """
    if ef.max_order < 20:
        raise ValueError("need at least 20 orders for a radius estimate")
    m = order_growth(ef, method)
    orders = np.arange(ef.max_order // 2, ef.max_order + 1)
    vals = m[orders]
    keep = vals > 1e-300
    if keep.sum() < 2:
        return float("inf")
    slope, _ = np.polyfit(orders[keep], np.log(vals[keep]), 1)
    return float(np.exp(-slope))


def product_eigenfunction(efs: list[TaylorEigenfunction], powers: list[int]) -> TaylorEigenfunction:
    """Truncated series of ``prod phi_i^k_i``; its eigenvalue is ``sum k_i lambda_i``."""
    if len(efs) != len(powers) or sum(powers) < 1:
        raise ValueError("need matching eigenfunctions and powers with positive total")
    base = efs[0]
    for ef in efs[1:]:
        if not np.allclose(ef.center, base.center, rtol=0, atol=0) or ef.max_order != base.max_order:
            raise ValueError("eigenfunctions must share center and truncation order")
    s_max = base.max_order
    mask = _degree_mask(base.coeff_array.shape, s_max)
    out = None
    lam = 0j
    for ef, k in zip(efs, powers):
        lam += k * ef.eigenvalue
        for _ in range(k):
            if out is None:
                out = ef.coeff_array.copy()
                continue
            full = scipy.signal.convolve(out, ef.coeff_array, method="direct")
            out = full[tuple(slice(0, s_max + 1) for _ in range(base.dimension))] * mask
    if sum(powers) == 1:
        seed = efs[int(np.argmax(powers))].gradient_seed
    else:
        seed = np.zeros_like(base.gradient_seed)
    return TaylorEigenfunction(base.center, lam, s_max, out, seed)


def from_coefficients(center, eigenvalue, coeffs: dict, max_order: int) -> TaylorEigenfunction:
    """Build a series directly from a coefficient map (for tests and synthetic inputs)."""
    center = np.asarray(center, dtype=float)
    n = len(center)
    A = np.zeros((max_order + 1,) * n, dtype=complex)
    for k, v in coeffs.items():
        A[tuple(k)] = v
    seed = np.array([A[tuple(np.eye(n, dtype=int)[i])] for i in range(n)])
    return TaylorEigenfunction(center, complex(eigenvalue), max_order, A, seed)


def pde_residual(system, ef, x) -> np.ndarray:
    """``F . grad phi - lambda phi`` at point(s) ``x``."""
    x = np.asarray(x, dtype=float)
    return np.sum(system.rhs(x) * ef.gradient(x), axis=-1) - ef.eigenvalue * ef(x)
