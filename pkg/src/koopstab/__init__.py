"""Global stability analysis of polynomial vector fields through Koopman eigenfunctions.

Fixed points: Taylor-series eigenfunctions about the equilibrium, or tensor
Bernstein least-squares eigenfunctions on a box.  Limit cycles: a mixed
Fourier-Bernstein eigenfunction on an annulus around a planar cycle.
Eigenfunctions feed Lyapunov functions, basin estimates and trajectory
checks.
"""

from .bernstein_fp import BernsteinEigenfunction, solve_box_eigenfunctions
from .limit_cycle import FourierBernsteinEigenfunction, solve_limit_cycle_eigenfunction
from .poly import MonomialPoly
from .stability import (
    GridSpec,
    LyapunovFunction,
    basin_estimate,
    decrease_region,
    make_lyapunov,
    verify_decay_envelope,
    verify_semigroup,
)
from .system import (
    BoxMap,
    CallableSystem,
    DynamicalSystem,
    find_fixed_point,
    find_limit_cycle,
    floquet_exponents,
    jacobian_spectrum,
)
from .taylor import TaylorEigenfunction, estimate_radius, solve_all_taylor, solve_taylor

__all__ = [
    "BernsteinEigenfunction",
    "BoxMap",
    "CallableSystem",
    "DynamicalSystem",
    "FourierBernsteinEigenfunction",
    "GridSpec",
    "LyapunovFunction",
    "MonomialPoly",
    "TaylorEigenfunction",
    "basin_estimate",
    "decrease_region",
    "estimate_radius",
    "find_fixed_point",
    "find_limit_cycle",
    "floquet_exponents",
    "jacobian_spectrum",
    "make_lyapunov",
    "solve_all_taylor",
    "solve_box_eigenfunctions",
    "solve_limit_cycle_eigenfunction",
    "solve_taylor",
    "verify_decay_envelope",
    "verify_semigroup",
]
