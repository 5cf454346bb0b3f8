"""Built-in systems used by the tests, scripts and the CLI ``--system`` flag."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .poly import MonomialPoly
from .system import CallableSystem, DynamicalSystem


def _vars(n: int):
    return [MonomialPoly.variable(n, i) for i in range(n)]


def backward_van_der_pol() -> DynamicalSystem:
    """Stable origin whose basin is bounded by an unstable cycle."""
    x1, x2 = _vars(2)
    return DynamicalSystem((-x2, x1 - x2 + x1**2 * x2), "backward-van-der-pol")


def saddle_pair() -> DynamicalSystem:
    """Stable origin with saddles at ``(+-sqrt 6, 0)``."""
    x1, x2 = _vars(2)
    return DynamicalSystem((x2, -2 * x1 + float(Fraction(1, 3)) * x1**3 - x2), "saddle-pair")


def cubic_planar() -> DynamicalSystem:
    """Globally stable on ``[-2, 2]^2`` with eigenvalues near -0.698 and -1.052."""
    x1, x2 = _vars(2)
    f1 = -0.75 * x1 - 0.125 * x2 + 0.25 * x1 * x2 - 0.25 * x2**2 - 0.5 * x1**3
    f2 = -0.125 * x1 - x2
    return DynamicalSystem((f1, f2), "cubic-planar")


def van_der_pol(mu: float = 1.0) -> DynamicalSystem:
    x1, x2 = _vars(2)
    return DynamicalSystem((x2, -x1 + mu * x2 - mu * x1**2 * x2), "van-der-pol")


def linear(A) -> DynamicalSystem:
    A = np.asarray(A, dtype=float)
    xs = _vars(A.shape[0])
    comps = []
    for row in A:
        p = MonomialPoly.zero(A.shape[0])
        for a, x in zip(row, xs):
            if a != 0:
                p = p + a * x
        comps.append(p)
    return DynamicalSystem(tuple(comps), "linear")


def cubic_decay() -> DynamicalSystem:
    """``xdot = -x^3``: non-hyperbolic origin."""
    (x,) = _vars(1)
    return DynamicalSystem((-(x**3),), "cubic-decay")


def modulated_circle() -> CallableSystem:
    """``thetadot = 1``, ``rdot = (2 + cos 6 theta - cos 10 theta) r (1 - r^2)``; unit cycle, exponent -4."""
    import sympy

    x, y = sympy.symbols("x y", real=True)
    th = sympy.atan2(y, x)
    a = 2 + sympy.cos(6 * th) - sympy.cos(10 * th)
    g = a * (1 - x**2 - y**2)
    return CallableSystem.from_sympy([g * x - y, g * y + x], [x, y], "modulated-circle")


def modulated_circle_eigenfunction(x) -> np.ndarray:
    """Closed form ``(1 - r^-2) exp(sin 6 theta / 3 - sin 10 theta / 5) / 4`` for :func:`modulated_circle`."""
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x**2, axis=-1)
    th = np.arctan2(x[..., 1], x[..., 0])
    return (1 - 1 / r2) * np.exp(np.sin(6 * th) / 3 - np.sin(10 * th) / 5) / 4


def circle(rate: float = 1.0) -> CallableSystem:
    """``thetadot = 1``, ``rdot = rate r (1 - r)``; unit cycle, exponent ``-rate``."""
    import sympy

    x, y = sympy.symbols("x y", real=True)
    g = rate * (1 - sympy.sqrt(x**2 + y**2))
    return CallableSystem.from_sympy([g * x - y, g * y + x], [x, y], "circle")


def polynomial_circle() -> DynamicalSystem:
    """``thetadot = 1``, ``rdot = r (1 - r^2)``; unit cycle, exponent -2."""
    x1, x2 = _vars(2)
    g = 1 - x1**2 - x2**2
    return DynamicalSystem((g * x1 - x2, g * x2 + x1), "polynomial-circle")


BUILTIN = {
    "backward-van-der-pol": backward_van_der_pol,
    "saddle-pair": saddle_pair,
    "cubic-planar": cubic_planar,
    "van-der-pol": van_der_pol,
    "modulated-circle": modulated_circle,
    "circle": circle,
    "polynomial-circle": polynomial_circle,
    "cubic-decay": cubic_decay,
}


def builtin(name: str):
    try:
        return BUILTIN[name]()
    except KeyError:
        raise KeyError(f"unknown built-in system {name!r}; choose from {sorted(BUILTIN)}") from None
