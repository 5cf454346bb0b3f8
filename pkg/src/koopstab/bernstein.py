"""Bernstein-basis operators on [0, 1] and on the tensor box [0, 1]^N.

Coefficient vectors use the ordering ``b^s(x) = (b_0^s, ..., b_s^s)`` with
``b_j^s(x) = C(s, j) x^j (1 - x)^(s - j)``; tensor vectors are Kronecker
ordered, ``B^s(x) = b^s(x_1) kron ... kron b^s(x_N)``, so the last axis varies
fastest.  All matrices act on coefficient vectors: if ``p = P . b^s`` then
``dp/dx = (D P) . b^s``.
"""

from __future__ import annotations

import functools
import itertools

import numpy as np
import scipy.sparse as sp

from .poly import MonomialPoly

MAX_DEGREE = 400


class DegreeError(ValueError):
    pass


@functools.lru_cache(maxsize=None)
def _pascal(n: int) -> np.ndarray:
    table = np.zeros((n + 1, n + 1))
    table[:, 0] = 1.0
    for i in range(1, n + 1):
        table[i, 1 : i + 1] = table[i - 1, 0:i] + table[i - 1, 1 : i + 1]
    return table


def binom(n: int, k: int) -> float:
    if k < 0 or k > n:
        return 0.0
    if n > MAX_DEGREE:
        raise DegreeError(f"degree {n} exceeds the binomial cap {MAX_DEGREE}")
    return _pascal(MAX_DEGREE)[n, k]


def binom_row(n: int) -> np.ndarray:
    if n > MAX_DEGREE:
        raise DegreeError(f"degree {n} exceeds the binomial cap {MAX_DEGREE}")
    return _pascal(MAX_DEGREE)[n, : n + 1].copy()


# ---------------------------------------------------------------- 1D


def eval_basis_1d(s: int, x) -> np.ndarray:
    """Basis values ``b^s(x)``; output has shape ``x.shape + (s + 1,)``."""
    x = np.asarray(x, dtype=float)[..., None]
    j = np.arange(s + 1)
    # 0**0 is 1 in numpy, which is what the endpoint cases need
    return binom_row(s) * x**j * (1.0 - x) ** (s - j)


def eval_basis_deriv_1d(s: int, x) -> np.ndarray:
    """Derivatives ``d b^s / dx`` at ``x``; shape ``x.shape + (s + 1,)``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape + (s + 1,))
    if s == 0:
        return out
    lower = eval_basis_1d(s - 1, x)
    out[..., 1:] += s * lower
    out[..., :-1] -= s * lower
    return out


def diff_matrix_1d(s: int) -> np.ndarray:
    """Differentiation matrix: three-band rule, derivative kept in degree ``s``."""
    D = np.zeros((s + 1, s + 1))
    for i in range(1, s + 2):
        D[i - 1, i - 1] = -s + 2 * (i - 1)
        if i + 1 <= s + 1:
            D[i - 1, i] = s - i + 1
        if i - 1 >= 1:
            D[i - 1, i - 2] = -i + 1
    return D


def mult_matrix_1d(Q, s: int) -> np.ndarray:
    """Matrix ``M`` with ``(M P) . b^(s+s') = (Q . b^s') (P . b^s)``."""
    Q = np.asarray(Q)
    sq = len(Q) - 1
    cs, cq, cp = binom_row(s), binom_row(sq), binom_row(s + sq)
    M = np.zeros((s + sq + 1, s + 1), dtype=np.result_type(Q.dtype, float))
    for i in range(s + sq + 1):
        for j in range(max(0, i - sq), min(s, i) + 1):
            M[i, j] = Q[i - j] * cs[j] * cq[i - j] / cp[i]
    return M


def basis_mult_matrix_1d(k: int, s_prime: int, s: int) -> sp.csr_matrix:
    """Multiplication by the single basis polynomial ``b_k^{s'}`` (one shifted band)."""
    cs, cq, cp = binom_row(s), binom_row(s_prime), binom_row(s + s_prime)
    j = np.arange(s + 1)
    vals = cs * cq[k] / cp[j + k]
    return sp.csr_matrix((vals, (j + k, j)), shape=(s + s_prime + 1, s + 1))


def raise_matrix_1d(s: int, r: int) -> np.ndarray:
    """Degree-raising matrix ``T^{s,r}`` of shape ``(s + r + 1, s + 1)``."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    cs, cr, cp = binom_row(s), binom_row(r), binom_row(s + r)
    T = np.zeros((s + r + 1, s + 1))
    for j in range(s + 1):
        for i in range(j, j + r + 1):
            T[i, j] = cs[j] * cr[i - j] / cp[i]
    return T


# ---------------------------------------------------------------- tensor


def _kron_all(mats) -> sp.csr_matrix:
    out = sp.csr_matrix(mats[0])
    for m in mats[1:]:
        out = sp.kron(out, sp.csr_matrix(m), format="csr")
    return out


def tensor_diff_matrix(axis: int, s: int, n: int) -> sp.csr_matrix:
    """``I kron ... kron D^s kron ... kron I`` with ``D^s`` in slot ``axis`` (0-based)."""
    if not 0 <= axis < n:
        raise IndexError(f"axis {axis} out of range for dimension {n}")
    eye = sp.identity(s + 1, format="csr")
    mats = [eye] * n
    mats[axis] = diff_matrix_1d(s)
    return _kron_all(mats)


def tensor_raise_matrix(s: int, r: int, n: int) -> sp.csr_matrix:
    return _kron_all([raise_matrix_1d(s, r)] * n)


def tensor_mult_matrix(Q, s_prime: int, s: int, n: int) -> sp.csr_matrix:
    """Multiplication by ``q = Q . B^{s'}`` acting on degree-``s`` tensor vectors.

    Built as ``sum_k Q_k M^{k_1} kron ... kron M^{k_n}`` with ``M^k`` the
    single-basis-element multiplication matrices, accumulated in multi-index
    order.
    """
    Q = np.asarray(Q)
    if Q.size != (s_prime + 1) ** n:
        raise ValueError(f"Q has {Q.size} entries, expected {(s_prime + 1) ** n}")
    Qt = Q.reshape((s_prime + 1,) * n)
    singles = [basis_mult_matrix_1d(k, s_prime, s) for k in range(s_prime + 1)]
    size = (s + s_prime + 1) ** n, (s + 1) ** n
    out = sp.csr_matrix(size, dtype=np.result_type(Q.dtype, float))
    for k in itertools.product(range(s_prime + 1), repeat=n):
        c = Qt[k]
        if c == 0:
            continue
        out = out + c * _kron_all([singles[ki] for ki in k])
    return out.tocsr()


def tensor_basis(s: int, x) -> np.ndarray:
    """Kronecker basis vector(s) ``B^s(x)``; ``x`` has trailing axis N."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    out = eval_basis_1d(s, x[..., 0])
    for i in range(1, n):
        b = eval_basis_1d(s, x[..., i])
        out = (out[..., :, None] * b[..., None, :]).reshape(x.shape[:-1] + (-1,))
    return out


def tensor_basis_gradient(s: int, x) -> np.ndarray:
    """Matrix of shape ``((s+1)^N, N)`` with columns ``dB^s/dx_l`` at one point."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    vals = [eval_basis_1d(s, x[i]) for i in range(n)]
    ders = [eval_basis_deriv_1d(s, x[i]) for i in range(n)]
    cols = []
    for l in range(n):
        parts = [ders[i] if i == l else vals[i] for i in range(n)]
        v = parts[0]
        for p in parts[1:]:
            v = np.kron(v, p)
        cols.append(v)
    return np.stack(cols, axis=1)


def eval_tensor(P, s: int, x) -> np.ndarray | complex:
    """Evaluate ``P . B^s`` at points ``x`` (trailing axis N) without forming ``B^s``."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    pts = x.reshape(-1, x.shape[-1])
    n = pts.shape[1]
    C = np.asarray(P).reshape((s + 1,) * n)
    out = np.tensordot(C, eval_basis_1d(s, pts[:, n - 1]), axes=([n - 1], [1]))
    for i in range(n - 2, -1, -1):
        out = np.einsum("...jp,pj->...p", out, eval_basis_1d(s, pts[:, i]))
    out = out.reshape(x.shape[:-1])
    return complex(out) if scalar else out


def monomial_to_bernstein(p: MonomialPoly, s: int) -> np.ndarray:
    """Tensor Bernstein coefficients of ``p`` (centered at 0) in degree ``s`` per axis.

    Uses ``x^k = sum_j [C(j, k) / C(s, k)] b_j^s(x)`` on each axis.
    """
    if any(c != 0.0 for c in p.center):
        p = p.recenter((0.0,) * p.dimension)
    n = p.dimension
    for axis in range(n):
        if p.axis_degree(axis) > s:
            raise DegreeError(f"axis {axis} has degree {p.axis_degree(axis)} > {s}")
    conv = np.zeros((s + 1, s + 1))  # conv[k, j] = C(j, k) / C(s, k)
    for k in range(s + 1):
        for j in range(k, s + 1):
            conv[k, j] = binom(j, k) / binom(s, k)
    out = np.zeros((s + 1,) * n, dtype=complex)
    for k, v in p.terms.items():
        vec = conv[k[0]]
        for i in range(1, n):
            vec = np.multiply.outer(vec, conv[k[i]])
        out += v * vec
    out = out.ravel()
    if np.all(out.imag == 0):
        out = out.real.copy()
    return out
