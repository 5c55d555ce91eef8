"""Dense symmetric linear algebra helpers used by the rest of the package.

All routines work on float64 arrays and treat singular values or eigenvalues
below a relative tolerance of the largest one as exact zeros.
"""

from typing import NamedTuple

import numpy as np

from .errors import DimensionError

DEFAULT_RTOL = 1e-10

SYMMETRY_RTOL = 1e-10


class EigenResult(NamedTuple):
    """Eigenvalues in descending order and eigenvectors as matching columns."""

    values: np.ndarray
    vectors: np.ndarray


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite float64 2-D array, rejecting anything else."""
    out = np.asarray(m, dtype=np.float64)
    if out.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={out.ndim}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite entries")
    return out


def as_vector(v, name: str = "vector") -> np.ndarray:
    """Coerce to a finite float64 1-D array."""
    out = np.asarray(v, dtype=np.float64)
    if out.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got ndim={out.ndim}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite entries")
    return out


def centering_matrix(n: int) -> np.ndarray:
    """H = I - (1/n) 11^T, the projector removing the mean component."""
    if n < 1:
        raise DimensionError(f"centering matrix needs n >= 1, got {n}")
    return np.eye(n) - np.full((n, n), 1.0 / n)


def center_gram(gram: np.ndarray) -> np.ndarray:
    """Double-center a symmetric Gram matrix: returns H @ gram @ H.

    Computed through the row/column mean identity rather than two matrix
    products, then symmetrized so roundoff cannot break row sum == column sum.
    """
    gram = as_matrix(gram, "gram")
    n, m = gram.shape
    if n != m:
        raise DimensionError(f"gram must be square, got {gram.shape}")
    row_means = gram.mean(axis=1, keepdims=True)
    col_means = gram.mean(axis=0, keepdims=True)
    total_mean = gram.mean()
    centered = gram - row_means - col_means + total_mean
    return (centered + centered.T) / 2.0


def sym_eig(m: np.ndarray) -> EigenResult:
    """Full eigendecomposition of a symmetric matrix, descending order."""
    m = as_matrix(m, "matrix")
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"matrix must be square, got {m.shape}")
    scale = np.linalg.norm(m)
    asym = np.linalg.norm(m - m.T)
    if asym > SYMMETRY_RTOL * scale:
        raise ValueError(
            f"matrix is not symmetric: ||M - M^T|| = {asym:.3e} "
            f"exceeds {SYMMETRY_RTOL:.0e} * ||M|| = {SYMMETRY_RTOL * scale:.3e}"
        )
    values, vectors = np.linalg.eigh((m + m.T) / 2.0)
    order = np.argsort(values)[::-1]
    return EigenResult(values[order], vectors[:, order])


def pinv(m: np.ndarray, rtol: float = DEFAULT_RTOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse with singular values below rtol * s_max zeroed."""
    if rtol <= 0:
        raise ValueError(f"rtol must be positive, got {rtol}")
    m = as_matrix(m, "matrix")
    return np.linalg.pinv(m, rcond=rtol)


def numerical_rank(values: np.ndarray, rtol: float = DEFAULT_RTOL) -> int:
    """Count of values strictly above rtol * max(values, 0).

    `values` are eigenvalues or singular values sorted descending. When every
    value is <= 0 the rank is 0.
    """
    if rtol <= 0:
        raise ValueError(f"rtol must be positive, got {rtol}")
    values = as_vector(values, "values")
    if values.size == 0:
        return 0
    top = max(float(values[0]), 0.0)
    return int(np.sum(values > rtol * top))
