"""Fixed-point eigenfunctions in a tensor Bernstein basis on a box.

The eigenvalue equation is imposed coefficient-wise in the degree ``s + s'``
basis, stacked with value and gradient conditions at the fixed point, and
solved in the minimum-norm least-squares sense.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import bernstein as bz
from .system import BoxMap, DynamicalSystem, SpectrumReport, jacobian_spectrum, pull_back_field

CERTIFY_THRESHOLD = 1e-3


@dataclass(frozen=True)
class FixedPointSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    n_pde_rows: int
    degree: int
    s_prime: int
    eigenvalue: complex
    seed: np.ndarray
    u_star: np.ndarray
    weight: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


@dataclass(frozen=True)
class BernsteinEigenfunction:
    box: BoxMap
    degree: int
    eigenvalue: complex
    coeffs: np.ndarray
    lsq_residual: float
    fixed_point_box: np.ndarray
    seed: np.ndarray
    certified: bool
    threshold: float = CERTIFY_THRESHOLD

    @property
    def dimension(self) -> int:
        return self.box.dimension

    @property
    def fixed_point(self) -> np.ndarray:
        return self.box.inverse(self.fixed_point_box)

    def __call__(self, x):
        return eval_bernstein(self, x)

    def eval_box(self, u):
        return bz.eval_tensor(self.coeffs, self.degree, u)

    def inside(self, x) -> np.ndarray:
        return self.box.contains(x)

    def conj(self) -> "BernsteinEigenfunction":
        return BernsteinEigenfunction(
            self.box, self.degree, complex(self.eigenvalue).conjugate(), self.coeffs.conj(), self.lsq_residual,
            self.fixed_point_box, self.seed.conj(), self.certified, self.threshold,
        )


def field_bernstein_coeffs(sys_box: DynamicalSystem, s_prime: int | None = None):
    """Bernstein coefficients of each field component in degree ``s'`` (max per-axis degree by default)."""
    s_prime = sys_box.axis_degree() if s_prime is None else s_prime
    if s_prime > bz.MAX_DEGREE:
        raise bz.DegreeError(f"field degree {s_prime} exceeds the Bernstein cap")
    return s_prime, [bz.monomial_to_bernstein(p, s_prime) for p in sys_box.components]


def pde_operator(sys_box: DynamicalSystem, s: int, lam: complex, s_prime: int | None = None) -> sp.csr_matrix:
    """``sum_l M_l D_l - lambda T``: maps degree-``s`` coefficients to degree ``s + s'``."""
    n = sys_box.dimension
    s_prime, qs = field_bernstein_coeffs(sys_box, s_prime)
    if s + s_prime > bz.MAX_DEGREE:
        raise bz.DegreeError(f"degree {s} + {s_prime} exceeds the Bernstein cap {bz.MAX_DEGREE}")
    op = None
    for l, q in enumerate(qs):
        term = bz.tensor_mult_matrix(q, s_prime, s, n) @ bz.tensor_diff_matrix(l, s, n)
        op = term if op is None else op + term
    return (op - lam * bz.tensor_raise_matrix(s, s_prime, n)).tocsr()


def assemble_fp_system(
    sys_box: DynamicalSystem,
    spec: SpectrumReport,
    eig_index: int,
    s: int,
    *,
    weight: float | None = None,
) -> FixedPointSystem:
    """Stack the PDE block with value and gradient conditions at the fixed point."""
    n = sys_box.dimension
    lam = complex(spec.eigenvalues[eig_index])
    w = np.asarray(spec.left_eigenvectors[:, eig_index], dtype=complex)
    u_star = np.asarray(spec.fixed_point, dtype=float)
    s_prime = sys_box.axis_degree()
    pde = pde_operator(sys_box, s, lam, s_prime)
    n_pde = pde.shape[0]
    weight = np.sqrt(n_pde) if weight is None else weight
    value_row = bz.tensor_basis(s, u_star)[None, :]
    grad_rows = bz.tensor_basis_gradient(s, u_star).T
    A = sp.vstack([pde, sp.csr_matrix(weight * value_row), sp.csr_matrix(weight * grad_rows)], format="csr")
    b = np.concatenate([np.zeros(n_pde + 1, dtype=complex), weight * w])
    if lam.imag == 0 and np.all(w.imag == 0):
        A = A.real.tocsr() if np.iscomplexobj(A.data) else A
        b = b.real
    return FixedPointSystem(A, b, n_pde, s, s_prime, lam, w, u_star, float(weight))


def lstsq_min_norm(A, b, rcond: float = 1e-12) -> np.ndarray:
    dense = A.toarray() if sp.issparse(A) else np.asarray(A)
    x, *_ = scipy.linalg.lstsq(dense, b, cond=rcond, lapack_driver="gelsd", overwrite_a=True, check_finite=False)
    return x


def solve_fp(
    system: FixedPointSystem, box: BoxMap | None = None, *, threshold: float = CERTIFY_THRESHOLD
) -> BernsteinEigenfunction:
    """Minimum-norm least-squares solve (SVD, relative cutoff 1e-12)."""
    A, b = system.matrix, system.rhs
    phi = lstsq_min_norm(A, b)
    resid = float(np.linalg.norm(A @ phi - b) / np.linalg.norm(b))
    if not np.all(np.isfinite(phi)):
        raise FloatingPointError("non-finite Bernstein coefficients")
    box = BoxMap.unit(len(system.u_star)) if box is None else box
    return BernsteinEigenfunction(
        box, system.degree, system.eigenvalue, phi, resid, system.u_star, system.seed, resid < threshold, threshold
    )


def eval_bernstein(ef: BernsteinEigenfunction, x, *, with_flag: bool = False):
    """Evaluate at original coordinates; ``with_flag`` also returns an outside-the-box mask."""
    u = ef.box.forward(x)
    vals = bz.eval_tensor(ef.coeffs, ef.degree, u)
    if with_flag:
        return vals, ~ef.box.contains(x, tol=1e-12)
    return vals


def gradient_box(ef: BernsteinEigenfunction, u) -> np.ndarray:
    """Gradient in box coordinates at a single point ``u``."""
    return bz.tensor_basis_gradient(ef.degree, np.asarray(u, dtype=float)).T @ ef.coeffs


def solve_box_eigenfunctions(
    system: DynamicalSystem,
    box: BoxMap,
    s: int,
    *,
    fixed_point=None,
    indices=None,
    threshold: float = CERTIFY_THRESHOLD,
    weight: float | None = None,
) -> tuple[SpectrumReport, list[BernsteinEigenfunction]]:
    """Pull the field back to the unit box and solve each requested eigenfunction.

    Conjugate eigenvalues reuse the conjugated solution of their partner.
    """
    sys_box = pull_back_field(system, box)
    u0 = box.forward(np.zeros(system.dimension) if fixed_point is None else fixed_point)
    from .system import find_fixed_point

    u_star = find_fixed_point(sys_box, u0)
    spec = jacobian_spectrum(sys_box, u_star)
    indices = range(system.dimension) if indices is None else indices
    out: dict[int, BernsteinEigenfunction] = {}
    for i in indices:
        j = spec.conjugate_index(i)
        if j is not None and j in out:
            out[i] = out[j].conj()
            continue
        fps = assemble_fp_system(sys_box, spec, i, s, weight=weight)
        out[i] = solve_fp(fps, box, threshold=threshold)
    return spec, [out[i] for i in indices]
