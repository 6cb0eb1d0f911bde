"""
Dense complex matrix kernel.

Products, adjoints, Kronecker products, the left partial trace, row-major
vectorization, the qudit Heisenberg-Weyl operators and a Hermitian
eigensolver (cyclic complex Jacobi rotations, with a LAPACK path for large
or hot-loop use). Every certificate check in the package goes through here.

Vectorization is row-major everywhere: vectorize(V)[j * cols + k] = V[j, k],
so |V>> lives in rows (x) cols with the row index on the left factor.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from qexclusion.config import LINALG_CONFIG
from qexclusion.errors import DimensionMismatch, NotConverged, NotHermitian
from qexclusion.utils.solver_logger import log_solver_call

logger = logging.getLogger(__name__)

CMatrix = NDArray[np.complex128]
CVector = NDArray[np.complex128]

EIGEN_METHODS = ("auto", "jacobi", "lapack")


def as_cmatrix(a: ArrayLike) -> CMatrix:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionMismatch(f"Expected a 2-d matrix, got shape {m.shape}", {"shape": list(m.shape)})
    return m


def as_cvector(v: ArrayLike) -> CVector:
    return np.asarray(v, dtype=np.complex128).reshape(-1)


def adjoint(a: CMatrix) -> CMatrix:
    return np.conj(np.swapaxes(a, -1, -2))


def outer(u: ArrayLike, v: Optional[ArrayLike] = None) -> CMatrix:
    """|u><v| (|u><u| when v is omitted)."""
    u = as_cvector(u)
    v = u if v is None else as_cvector(v)
    return np.outer(u, np.conj(v))


def kron(*factors: ArrayLike) -> CMatrix:
    result = np.ones((1, 1), dtype=np.complex128)
    for factor in factors:
        result = np.kron(result, np.asarray(factor, dtype=np.complex128))
    return result


def hermiticity_defect(a: CMatrix) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - adjoint(a))))


def is_hermitian(a: CMatrix, tol: Optional[float] = None) -> bool:
    tol = LINALG_CONFIG["hermitian_tol"] if tol is None else tol
    return hermiticity_defect(a) <= tol


def hermitize(a: CMatrix) -> CMatrix:
    return 0.5 * (a + adjoint(a))


def _require_square(a: CMatrix, name: str = "matrix") -> int:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}", {"shape": list(a.shape)})
    return a.shape[0]


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues ascending with orthonormal eigenvector columns."""

    eigenvalues: NDArray[np.float64]
    eigenvectors: CMatrix
    method: str
    sweeps: int = 0

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    def reconstruct(self) -> CMatrix:
        v = self.eigenvectors
        return (v * self.eigenvalues[np.newaxis, :]) @ adjoint(v)


def _jacobi_rotations(a: CMatrix, max_sweeps: int, offdiag_rtol: float):
    """Cyclic complex Jacobi: each (p, q) rotation removes the phase of a_pq, then applies a real rotation."""
    work = a.copy()
    n = work.shape[0]
    vectors = np.eye(n, dtype=np.complex128)
    scale = float(np.linalg.norm(work))
    if n == 1 or scale == 0.0:
        return np.real(np.diag(work)).copy(), vectors, 0

    off_mask = ~np.eye(n, dtype=bool)
    skip_below = 1e-300 + 1e-22 * scale

    for sweep in range(1, max_sweeps + 1):
        off = float(np.sqrt(np.sum(np.abs(work[off_mask]) ** 2)))
        if off <= offdiag_rtol * scale:
            return np.real(np.diag(work)).copy(), vectors, sweep - 1

        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                magnitude = abs(apq)
                if magnitude <= skip_below:
                    continue
                phase = apq / magnitude
                app = work[p, p].real
                aqq = work[q, q].real

                theta = (aqq - app) / (2.0 * magnitude)
                t = (1.0 if theta >= 0.0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                cphase = np.conj(phase)

                # A <- A U on columns p, q
                col_p = work[:, p].copy()
                col_q = work[:, q].copy()
                work[:, p] = c * col_p - s * cphase * col_q
                work[:, q] = s * col_p + c * cphase * col_q

                # A <- U^H A on rows p, q
                row_p = work[p, :].copy()
                row_q = work[q, :].copy()
                work[p, :] = c * row_p - s * phase * row_q
                work[q, :] = s * row_p + c * phase * row_q

                work[p, q] = 0.0
                work[q, p] = 0.0
                work[p, p] = work[p, p].real
                work[q, q] = work[q, q].real

                vec_p = vectors[:, p].copy()
                vec_q = vectors[:, q].copy()
                vectors[:, p] = c * vec_p - s * cphase * vec_q
                vectors[:, q] = s * vec_p + c * cphase * vec_q

    off = float(np.sqrt(np.sum(np.abs(work[off_mask]) ** 2)))
    if off <= offdiag_rtol * scale:
        return np.real(np.diag(work)).copy(), vectors, max_sweeps
    raise NotConverged(
        f"Jacobi sweep cap {max_sweeps} reached with off-diagonal norm {off:.3e}",
        {"sweeps": max_sweeps, "off_diagonal": off, "dim": n},
    )


@log_solver_call(
    solver_name="hermitian_eigen",
    metadata_fields={"method": lambda r: r.method, "dim": lambda r: len(r.eigenvalues), "sweeps": lambda r: r.sweeps},
    level=logging.DEBUG,
)
def hermitian_eigen(
    a: ArrayLike,
    tol: Optional[float] = None,
    method: str = "auto",
    max_sweeps: Optional[int] = None,
) -> EigenDecomposition:
    """
    Eigen-decompose a Hermitian matrix.

    Args:
        a: Square matrix, Hermitian within ``tol``
        tol: Absolute Hermiticity tolerance (default 1e-12)
        method: "jacobi", "lapack" or "auto" (Jacobi up to the configured dimension ceiling)
        max_sweeps: Jacobi sweep cap (default 100)

    Returns:
        EigenDecomposition with ascending eigenvalues; the reconstruction
        residual is checked against 1e-9 relative before returning.

    Raises:
        NotHermitian: symmetry defect above tol
        NotConverged: sweep cap hit or residual check failed
    """
    a = as_cmatrix(a)
    n = _require_square(a)
    tol = LINALG_CONFIG["hermitian_tol"] if tol is None else tol
    max_sweeps = LINALG_CONFIG["jacobi_max_sweeps"] if max_sweeps is None else max_sweeps
    if method not in EIGEN_METHODS:
        raise ValueError(f"Unknown eigen method: {method}")

    defect = hermiticity_defect(a)
    if defect > tol:
        raise NotHermitian(f"Hermiticity defect {defect:.3e} exceeds {tol:.1e}", {"defect": defect, "tol": tol})
    h = hermitize(a)

    if method == "auto":
        method = "jacobi" if n <= LINALG_CONFIG["jacobi_max_dim"] else "lapack"

    sweeps = 0
    if method == "jacobi":
        values, vectors, sweeps = _jacobi_rotations(h, max_sweeps, LINALG_CONFIG["jacobi_offdiag_rtol"])
    else:
        values, vectors = np.linalg.eigh(h)

    order = np.argsort(values, kind="stable")
    decomposition = EigenDecomposition(
        eigenvalues=np.asarray(values, dtype=np.float64)[order],
        eigenvectors=np.ascontiguousarray(vectors[:, order]),
        method=method,
        sweeps=sweeps,
    )

    scale = float(np.linalg.norm(h))
    residual = float(np.linalg.norm(decomposition.reconstruct() - h))
    if residual > LINALG_CONFIG["eigen_residual_rtol"] * scale:
        raise NotConverged(
            f"Eigen reconstruction residual {residual:.3e} exceeds tolerance",
            {"residual": residual, "scale": scale, "method": method},
        )
    gram = adjoint(decomposition.eigenvectors) @ decomposition.eigenvectors
    gram_defect = float(np.max(np.abs(gram - np.eye(n)))) if n else 0.0
    if gram_defect > LINALG_CONFIG["gram_tol"]:
        raise NotConverged(
            f"Eigenvectors not orthonormal (defect {gram_defect:.3e})",
            {"gram_defect": gram_defect, "method": method},
        )
    return decomposition


def lambda_min(a: ArrayLike, method: str = "auto") -> float:
    return hermitian_eigen(hermitize(as_cmatrix(a)), method=method).lambda_min


def lambda_max(a: ArrayLike, method: str = "auto") -> float:
    return hermitian_eigen(hermitize(as_cmatrix(a)), method=method).lambda_max


def partial_trace_left(m: ArrayLike, dim_left: int, dim_right: int) -> CMatrix:
    """Trace out the left factor of a (dim_left * dim_right)-square operator."""
    m = as_cmatrix(m)
    size = dim_left * dim_right
    if m.shape != (size, size):
        raise DimensionMismatch(
            f"Expected a {size}x{size} operator for dims ({dim_left}, {dim_right}), got {m.shape}",
            {"shape": list(m.shape), "dim_left": dim_left, "dim_right": dim_right},
        )
    return np.einsum("ijik->jk", m.reshape(dim_left, dim_right, dim_left, dim_right))


def vectorize(v: ArrayLike) -> CVector:
    """Row-major |V>> = sum_jk V[j, k] |j>|k>, returned as a flat column of length rows * cols."""
    return np.asarray(v, dtype=np.complex128).reshape(-1).copy()


def unvectorize(vec: ArrayLike, rows: int, cols: int) -> CMatrix:
    vec = as_cvector(vec)
    if vec.size != rows * cols:
        raise DimensionMismatch(f"Cannot reshape length {vec.size} into {rows}x{cols}")
    return vec.reshape(rows, cols).copy()


def heisenberg_weyl(d: int, z: int, x: int) -> CMatrix:
    """W_{z,x} = sum_k w^{zk} |k + x mod d><k| with w = exp(2 pi i / d)."""
    if d < 1:
        raise DimensionMismatch(f"Qudit dimension must be positive, got {d}")
    omega = np.exp(2j * np.pi / d)
    w = np.zeros((d, d), dtype=np.complex128)
    for k in range(d):
        w[(k + x) % d, k] = omega ** ((z * k) % d)
    return w


def psd_project(stack: ArrayLike, method: str = "lapack") -> NDArray[np.complex128]:
    """Clip negative eigenvalues of each matrix in a (n, d, d) stack (or a single matrix)."""
    arr = np.asarray(stack, dtype=np.complex128)
    single = arr.ndim == 2
    if single:
        arr = arr[np.newaxis]
    arr = hermitize(arr)

    if method == "lapack":
        values, vectors = np.linalg.eigh(arr)
        values = np.clip(values, 0.0, None)
        projected = (vectors * values[:, np.newaxis, :]) @ adjoint(vectors)
    else:
        projected = np.empty_like(arr)
        for i, block in enumerate(arr):
            eig = hermitian_eigen(block, method=method)
            values = np.clip(eig.eigenvalues, 0.0, None)
            projected[i] = (eig.eigenvectors * values[np.newaxis, :]) @ adjoint(eig.eigenvectors)

    projected = hermitize(projected)
    return projected[0] if single else projected


def inverse_sqrt_psd(a: ArrayLike, floor: float = 1e-14, method: str = "auto") -> CMatrix:
    """A^{-1/2} for a positive definite A; eigenvalues below ``floor`` raise NotConverged."""
    eig = hermitian_eigen(hermitize(as_cmatrix(a)), method=method)
    if eig.lambda_min <= floor:
        raise NotConverged(
            f"Matrix is not positive definite (lambda_min={eig.lambda_min:.3e})",
            {"lambda_min": eig.lambda_min},
        )
    scale = 1.0 / np.sqrt(eig.eigenvalues)
    return (eig.eigenvectors * scale[np.newaxis, :]) @ adjoint(eig.eigenvectors)


def direct_sum_vectors(parts: Sequence[ArrayLike]) -> CVector:
    if not parts:
        return np.zeros(0, dtype=np.complex128)
    return np.concatenate([as_cvector(p) for p in parts])
