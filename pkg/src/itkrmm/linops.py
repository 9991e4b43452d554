"""Dense linear-operator primitives shared by the learning algorithms.

Everything here works on plain ``numpy`` arrays in float64. Column sets are
``(d, m)`` matrices whose columns live in signal space; ``m == 0`` is allowed
and spans the zero subspace.
"""

from __future__ import annotations

import numpy as np

#: Singular values below ``RCOND * sigma_max`` are treated as zero.
RCOND = 1e-10
#: Masked atoms with norm below this count as erased.
VANISH_TOL = 1e-12


def _as_columns(A: np.ndarray, d: int | None = None) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise ValueError(f"expected a 2-d column set, got shape {A.shape}")
    if d is not None and A.shape[0] != d:
        raise ValueError(f"dimension mismatch: column set has d={A.shape[0]}, vector has d={d}")
    return A


def least_squares(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimum-norm least-squares solution ``A^+ b``."""
    b = np.asarray(b, dtype=np.float64)
    A = _as_columns(A, b.shape[0])
    if A.shape[1] == 0:
        return np.zeros(0)
    x, *_ = np.linalg.lstsq(A, b, rcond=RCOND)
    return x


def project(A: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Orthogonal projection of ``v`` onto the column span of ``A``."""
    v = np.asarray(v, dtype=np.float64)
    A = _as_columns(A, v.shape[0])
    if A.shape[1] == 0:
        return np.zeros_like(v)
    return A @ least_squares(A, v)


def project_complement(A: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Projection of ``v`` onto the orthogonal complement of span(A)."""
    v = np.asarray(v, dtype=np.float64)
    return v - project(A, v)


def polar_orthonormalize(B: np.ndarray, allow_rank_deficient: bool = False) -> np.ndarray:
    """Closest matrix with orthonormal columns to ``B`` (Frobenius norm).

    Computed as ``U V^T`` from the thin SVD ``B = U S V^T``. For a
    rank-deficient square ``B`` the nearest orthogonal matrix is not unique;
    pass ``allow_rank_deficient=True`` to accept the SVD's choice.
    """
    B = _as_columns(B)
    d, m = B.shape
    if m > d:
        raise ValueError(f"cannot orthonormalize {m} columns in dimension {d}")
    if m == 0:
        return B.copy()
    U, s, Vt = np.linalg.svd(B, full_matrices=False)
    if not allow_rank_deficient and s[-1] <= RCOND * s[0]:
        raise np.linalg.LinAlgError("polar_orthonormalize: input is rank deficient")
    return U @ Vt


def masked_norm(mask: np.ndarray, a: np.ndarray) -> float:
    """``||M a||_2`` for the diagonal 0/1 mask ``M``."""
    mask = np.asarray(mask, dtype=bool)
    a = np.asarray(a, dtype=np.float64)
    return float(np.linalg.norm(a[mask]))


def truncated_svd_lowrank(Y: np.ndarray, L: int) -> np.ndarray:
    """Top-``L`` left singular vectors of the data matrix ``Y`` (d x N)."""
    Y = _as_columns(Y)
    if L < 0 or L > min(Y.shape):
        raise ValueError(f"L={L} out of range for data of shape {Y.shape}")
    if L == 0:
        return np.zeros((Y.shape[0], 0))
    U, _, _ = np.linalg.svd(Y, full_matrices=False)
    return U[:, :L].copy()


def normalize_columns(A: np.ndarray) -> np.ndarray:
    A = _as_columns(A)
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = 1.0
    return A / norms


def sign(x):
    """Sign with ``sign(0) = +1``."""
    return np.where(np.asarray(x) >= 0, 1.0, -1.0)
