"""Sparse multivariate polynomials in a shifted monomial basis.

A :class:`MonomialPoly` stores ``{exponent tuple: complex coefficient}`` and a
center ``c`` so that the polynomial reads ``sum_k a_k prod_i (x_i - c_i)**k_i``.
Terms are kept in graded lexicographic order (total degree first, then
``x1`` before ``x2`` ...), which is also the ordering used for Taylor
coefficient vectors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Mapping

import numpy as np

MultiIndex = tuple[int, ...]

PRUNE = 1e-300


class DimensionError(ValueError):
    """Raised when a point or polynomial has the wrong ambient dimension."""


class CenterMismatchError(ValueError):
    """Raised when combining polynomials expanded about different centers."""


def graded_key(k: MultiIndex) -> tuple:
    return (sum(k), tuple(-e for e in k))


def monomials_of_degree(n: int, s: int) -> list[MultiIndex]:
    """All exponent tuples of length ``n`` and total degree ``s`` in graded-lex order."""
    if n == 1:
        return [(s,)]
    out = []
    for first in range(s, -1, -1):
        for rest in monomials_of_degree(n - 1, s - first):
            out.append((first,) + rest)
    return out


def _canonical(terms: Mapping[MultiIndex, complex]) -> dict[MultiIndex, complex]:
    kept = {tuple(int(e) for e in k): complex(v) for k, v in terms.items() if abs(v) >= PRUNE}
    return dict(sorted(kept.items(), key=lambda kv: graded_key(kv[0])))


@dataclass(frozen=True)
class MonomialPoly:
    dimension: int
    terms: dict[MultiIndex, complex] = field(default_factory=dict)
    center: tuple[float, ...] | None = None

    def __post_init__(self):
        for k in self.terms:
            if len(k) != self.dimension or any(e < 0 for e in k):
                raise DimensionError(f"bad multi-index {k} for dimension {self.dimension}")
        center = self.center if self.center is not None else (0.0,) * self.dimension
        if len(center) != self.dimension:
            raise DimensionError(f"center has length {len(center)}, expected {self.dimension}")
        object.__setattr__(self, "center", tuple(float(c) for c in center))
        object.__setattr__(self, "terms", _canonical(self.terms))

    # constructors

    @classmethod
    def constant(cls, dimension: int, value: complex, center=None) -> "MonomialPoly":
        return cls(dimension, {(0,) * dimension: value}, center)

    @classmethod
    def variable(cls, dimension: int, axis: int, center=None) -> "MonomialPoly":
        """The coordinate ``x_axis`` (0-based) expressed about ``center``."""
        center = tuple(center) if center is not None else (0.0,) * dimension
        e = [0] * dimension
        e[axis] = 1
        return cls(dimension, {tuple(e): 1.0, (0,) * dimension: center[axis]}, center)

    @classmethod
    def zero(cls, dimension: int, center=None) -> "MonomialPoly":
        return cls(dimension, {}, center)

    # inspection

    @property
    def degree(self) -> int:
        return max((sum(k) for k in self.terms), default=0)

    def axis_degree(self, axis: int) -> int:
        return max((k[axis] for k in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def is_real(self, tol: float = 0.0) -> bool:
        return all(abs(v.imag) <= tol for v in self.terms.values())

    def coefficient(self, k: MultiIndex) -> complex:
        return self.terms.get(tuple(k), 0j)

    def __repr__(self) -> str:
        if not self.terms:
            return f"MonomialPoly(0, dim={self.dimension})"
        parts = []
        for k, v in self.terms.items():
            mono = "*".join(f"x{i + 1}^{e}" if e > 1 else f"x{i + 1}" for i, e in enumerate(k) if e)
            coef = f"{v.real:g}" if v.imag == 0 else f"({v:g})"
            parts.append(coef + ("*" + mono if mono else ""))
        return "MonomialPoly(" + " + ".join(parts) + f", center={self.center})"

    # evaluation

    def __call__(self, x) -> complex | np.ndarray:
        return self.eval(x)

    def eval(self, x):
        """Evaluate at a point, or at an array of points with trailing axis ``N``."""
        x = np.asarray(x, dtype=complex if np.iscomplexobj(x) else float)
        if x.shape[-1:] != (self.dimension,):
            raise DimensionError(f"point has trailing shape {x.shape[-1:]}, expected ({self.dimension},)")
        scalar = x.ndim == 1
        d = x - np.asarray(self.center)
        if not self.terms:
            out = np.zeros(d.shape[:-1], dtype=complex)
            return complex(out) if scalar else out
        maxdeg = [self.axis_degree(i) for i in range(self.dimension)]
        powers = []
        for i in range(self.dimension):
            p = [np.ones(d.shape[:-1], dtype=d.dtype)]
            for _ in range(maxdeg[i]):
                p.append(p[-1] * d[..., i])
            powers.append(p)
        out = np.zeros(d.shape[:-1], dtype=complex)
        for k, v in self.terms.items():
            t = v
            for i, e in enumerate(k):
                if e:
                    t = t * powers[i][e]
            out = out + t
        return complex(out) if scalar else out

    # algebra

    def _check_compatible(self, other: "MonomialPoly") -> None:
        if other.dimension != self.dimension:
            raise DimensionError(f"dimensions {self.dimension} and {other.dimension} differ")
        if other.center != self.center:
            raise CenterMismatchError(f"centers {self.center} and {other.center} differ; recenter first")

    def __add__(self, other):
        if not isinstance(other, MonomialPoly):
            other = MonomialPoly.constant(self.dimension, other, self.center)
        self._check_compatible(other)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0j) + v
        return MonomialPoly(self.dimension, terms, self.center)

    __radd__ = __add__

    def __neg__(self):
        return MonomialPoly(self.dimension, {k: -v for k, v in self.terms.items()}, self.center)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c: complex) -> "MonomialPoly":
        return MonomialPoly(self.dimension, {k: c * v for k, v in self.terms.items()}, self.center)

    def __mul__(self, other):
        if isinstance(other, MonomialPoly):
            return self.multiply(other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, n: int) -> "MonomialPoly":
        out = MonomialPoly.constant(self.dimension, 1.0, self.center)
        for _ in range(n):
            out = out.multiply(self)
        return out

    def multiply(self, other: "MonomialPoly") -> "MonomialPoly":
        self._check_compatible(other)
        terms: dict[MultiIndex, complex] = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                terms[k] = terms.get(k, 0j) + v1 * v2
        return MonomialPoly(self.dimension, terms, self.center)

    def partial_derivative(self, axis: int) -> "MonomialPoly":
        """Formal derivative with respect to ``x_axis`` (0-based)."""
        if not 0 <= axis < self.dimension:
            raise IndexError(f"axis {axis} out of range for dimension {self.dimension}")
        terms = {}
        for k, v in self.terms.items():
            if k[axis]:
                kk = list(k)
                kk[axis] -= 1
                terms[tuple(kk)] = v * k[axis]
        return MonomialPoly(self.dimension, terms, self.center)

    def recenter(self, c) -> "MonomialPoly":
        """Exact re-expansion about ``c`` via the binomial theorem."""
        c = tuple(float(v) for v in c)
        if len(c) != self.dimension:
            raise DimensionError(f"center has length {len(c)}, expected {self.dimension}")
        shift = [a - b for a, b in zip(c, self.center)]
        terms: dict[MultiIndex, complex] = {}
        for k, v in self.terms.items():
            # (x - c_old)^k = sum_j C(k, j) shift^(k - j) (x - c_new)^j, axis by axis
            factors = [
                [(j, comb(e, j) * shift[i] ** (e - j)) for j in range(e + 1)]
                for i, e in enumerate(k)
            ]
            for combo in itertools.product(*factors):
                kk = tuple(j for j, _ in combo)
                w = v
                for _, f in combo:
                    w *= f
                terms[kk] = terms.get(kk, 0j) + w
        return MonomialPoly(self.dimension, terms, c)

    def compose_affine(self, offset, scale) -> "MonomialPoly":
        """Return ``q(u) = p(offset + scale * u)`` as a polynomial in ``u`` about 0."""
        offset = np.asarray(offset, dtype=float)
        scale = np.asarray(scale, dtype=float)
        p = self.recenter(offset)
        terms = {}
        for k, v in p.terms.items():
            terms[k] = v * np.prod([scale[i] ** e for i, e in enumerate(k)])
        return MonomialPoly(self.dimension, terms, (0.0,) * self.dimension)

    def homogeneous_part(self, s: int) -> "MonomialPoly":
        return MonomialPoly(self.dimension, {k: v for k, v in self.terms.items() if sum(k) == s}, self.center)

    def truncate(self, s: int) -> "MonomialPoly":
        return MonomialPoly(self.dimension, {k: v for k, v in self.terms.items() if sum(k) <= s}, self.center)

    def conj(self) -> "MonomialPoly":
        return MonomialPoly(self.dimension, {k: v.conjugate() for k, v in self.terms.items()}, self.center)


def gradient(p: MonomialPoly) -> list[MonomialPoly]:
    return [p.partial_derivative(i) for i in range(p.dimension)]


def from_terms(dimension: int, items: Iterable[tuple[MultiIndex, complex]], center=None) -> MonomialPoly:
    terms: dict[MultiIndex, complex] = {}
    for k, v in items:
        terms[tuple(k)] = terms.get(tuple(k), 0j) + v
    return MonomialPoly(dimension, terms, center)
