"""Construction of the subspace of mean-parity-fair functions.

A function g(x, s) = sum_i c_i k((x_i, s_i), .) has equal group-conditional
prediction means exactly when its coefficient vector is K-orthogonal to a
small basis extracted from the interplay of the joint Gram matrix K_XS and
the sensitive Gram matrix K_S. This module builds that basis and the
projector onto its K-orthogonal complement.

The defining eigenproblem couples the two centered Gram matrices and is not
symmetric. It is solved here through an equivalent symmetric problem: factor
the centered K_S into B B^T from its positive eigenpairs, eigendecompose
M = B^T K_XS B, and map the retained eigenvectors back through B. Both
problems share the same nonzero-eigenvalue span, and the eigenvalues of M
divided by n^2 are the eigenvalues of the original problem.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, MissingGroupError
from .linalg import DEFAULT_RTOL, as_matrix, center_gram, numerical_rank, sym_eig


@dataclass(frozen=True)
class Assumption1Report:
    """Identifiability of group means under the sensitive kernel.

    The construction recovers all k group-mean contrasts only when the
    centered sensitive Gram matrix has rank exactly k - 1. A smaller rank
    means some groups are indistinguishable to the sensitive kernel and the
    parity constraint silently weakens.
    """

    satisfied: bool
    centered_rank: int
    k: int


@dataclass(frozen=True)
class FairBasis:
    """K-orthonormal coefficient basis of the unfair directions.

    coeffs is (n, m) with coeffs.T @ K_XS @ coeffs = I_m; eigenvalues are the
    m positive eigenvalues of the defining problem in descending order. m is
    at most k - 1 and is 0 when every sample is in one group.
    """

    coeffs: np.ndarray
    eigenvalues: np.ndarray
    n: int

    @property
    def m(self) -> int:
        return self.coeffs.shape[1]


def check_assumption1(
    gram_s: np.ndarray, group_codes: np.ndarray, rtol: float = DEFAULT_RTOL
) -> Assumption1Report:
    """Check that the sensitive kernel separates the k groups."""
    gram_s = as_matrix(gram_s, "gram_s")
    codes = np.asarray(group_codes)
    if gram_s.shape[0] != gram_s.shape[1]:
        raise DimensionError(f"gram_s must be square, got {gram_s.shape}")
    if codes.ndim != 1 or codes.shape[0] != gram_s.shape[0]:
        raise DimensionError("group_codes must be 1-D and match gram_s")
    if codes.size == 0:
        raise DimensionError("need at least one sample")
    k = int(codes.max()) + 1
    present = np.unique(codes)
    if present.size != k:
        missing = sorted(set(range(k)) - set(int(c) for c in present))
        raise MissingGroupError(f"groups {missing} have no samples (k={k})")
    values = sym_eig(center_gram(gram_s)).values
    rank = numerical_rank(values, rtol)
    return Assumption1Report(satisfied=(rank == k - 1), centered_rank=rank, k=k)


def build_fair_basis(
    gram_xs: np.ndarray, gram_s: np.ndarray, rtol: float = DEFAULT_RTOL
) -> FairBasis:
    """Extract the directions along which group prediction means can differ."""
    gram_xs = as_matrix(gram_xs, "gram_xs")
    gram_s = as_matrix(gram_s, "gram_s")
    n = gram_xs.shape[0]
    if gram_xs.shape != (n, n) or gram_s.shape != (n, n):
        raise DimensionError(
            f"gram matrices must be square and equal-sized, "
            f"got {gram_xs.shape} and {gram_s.shape}"
        )
    centered_s = center_gram(gram_s)
    s_values, s_vectors = sym_eig(centered_s)
    r = numerical_rank(s_values, rtol)
    if r == 0:
        return FairBasis(np.zeros((n, 0)), np.zeros(0), n)
    factor = s_vectors[:, :r] * np.sqrt(s_values[:r])
    # Positive eigenvectors of a centered matrix are mean-free already; the
    # explicit re-centering only guards against roundoff.
    factor = factor - factor.mean(axis=0)
    coupled = factor.T @ gram_xs @ factor
    d_values, d_vectors = sym_eig((coupled + coupled.T) / 2.0)
    m = numerical_rank(d_values, rtol)
    if m == 0:
        return FairBasis(np.zeros((n, 0)), np.zeros(0), n)
    coeffs = (factor @ d_vectors[:, :m]) / np.sqrt(d_values[:m])
    return FairBasis(coeffs, d_values[:m] / float(n) ** 2, n)


def projection_matrix(basis: FairBasis, gram_xs: np.ndarray) -> np.ndarray:
    """P = I - C C^T K_XS, the K-orthogonal projector onto fair coefficients.

    Idempotent by construction, and C^T K_XS P = 0, so any projected
    coefficient vector yields predictions with equal group means.
    """
    gram_xs = as_matrix(gram_xs, "gram_xs")
    n = basis.n
    if gram_xs.shape != (n, n):
        raise DimensionError(f"gram_xs must be ({n}, {n}), got {gram_xs.shape}")
    if basis.m >= n and basis.m > 0:
        raise DimensionError(f"basis has m={basis.m} >= n={n} directions")
    if basis.m == 0:
        return np.eye(n)
    return np.eye(n) - basis.coeffs @ (basis.coeffs.T @ gram_xs)


def fair_group_mean_residual(
    gram_xs: np.ndarray,
    projector: np.ndarray,
    coef: np.ndarray,
    group_codes: np.ndarray,
) -> float:
    """Largest |group mean - overall mean| of the projected prediction vector."""
    pred = gram_xs @ (projector @ np.asarray(coef, dtype=np.float64))
    codes = np.asarray(group_codes)
    overall = pred.mean()
    worst = 0.0
    for g in np.unique(codes):
        worst = max(worst, abs(float(pred[codes == g].mean() - overall)))
    return worst
