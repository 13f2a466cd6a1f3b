"""Dense real-matrix kernels used by every other module.

All operations are pure functions on numpy arrays: inputs are validated,
never mutated, and results are freshly allocated.  Storage is dense
throughout; the target scale is a few thousand rows at most.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

# A pivot counts as zero when its magnitude falls below this fraction of the
# largest entry of the matrix being factored (scale invariant).
PIVOT_RTOL = 1e-12

# invert() refuses matrices whose 1-norm condition estimate exceeds this.
COND_LIMIT = 1.0 / PIVOT_RTOL

# How numerical_rank decides.  Recorded in verification reports so that
# rank-based checks are reproducible.
RANK_METHOD = "svd"


class SingularPivotError(Exception):
    """Elimination hit a pivot below tolerance.

    Either the matrix is singular or the given ordering is not a valid
    elimination order for it.
    """

    def __init__(self, index: int, value: float):
        super().__init__(f"pivot {index} is numerically zero ({value!r})")
        self.index = index
        self.value = value


class SingularMatrixError(Exception):
    """Matrix is singular or too ill-conditioned to invert reliably."""


class NonPositiveDeterminantError(Exception):
    """log-determinant requested for a matrix with det <= 0."""


def as_matrix(a, square: bool = False) -> np.ndarray:
    """Validate and convert to a float64 2-D array.

    Raises ValueError for wrong dimensionality, empty input, or non-finite
    entries; NaN/Inf are never admitted into any operation.
    """
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D array, got ndim={m.ndim}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"matrix must be non-empty, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    if square and m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def max_abs(a) -> float:
    """Largest absolute entry (the max-norm used by all tolerances here)."""
    return float(np.max(np.abs(np.asarray(a, dtype=float))))


@dataclass(frozen=True)
class LDUFactors:
    """Triangular factorization M = L @ diag(d) @ U.

    L is unit lower triangular, U unit upper triangular, and d holds the
    pivots of the elimination (the diagonal of D).
    """

    L: np.ndarray
    d: np.ndarray
    U: np.ndarray

    @property
    def D(self) -> np.ndarray:
        return np.diag(self.d)

    def reconstruct(self) -> np.ndarray:
        return self.L @ np.diag(self.d) @ self.U


def ldu_factor(m) -> LDUFactors:
    """Factor a square matrix as L D U without pivoting.

    No row or column exchanges are performed: the elimination order of the
    input is meaningful (it carries the sparsity structure), so callers that
    need a different order must pre-permute.  Every leading principal minor
    must therefore be nonzero.

    Raises SingularPivotError when a pivot falls below PIVOT_RTOL times the
    largest entry of the input.
    """
    m = as_matrix(m, square=True)
    n = m.shape[0]
    tol = PIVOT_RTOL * max_abs(m)
    w = m.copy()
    lower = np.eye(n)
    upper = np.eye(n)
    d = np.empty(n)
    for k in range(n):
        pivot = w[k, k]
        if abs(pivot) <= tol:
            raise SingularPivotError(k, pivot)
        d[k] = pivot
        lower[k + 1 :, k] = w[k + 1 :, k] / pivot
        upper[k, k + 1 :] = w[k, k + 1 :] / pivot
        w[k + 1 :, k + 1 :] -= np.outer(lower[k + 1 :, k], w[k, k + 1 :])
    return LDUFactors(L=lower, d=d, U=upper)


def invert(m) -> np.ndarray:
    """Dense inverse with an explicit conditioning guard.

    Serves as the brute-force oracle that local block assembly is checked
    against.  Raises SingularMatrixError when LAPACK reports singularity or
    the 1-norm condition estimate exceeds COND_LIMIT.
    """
    m = as_matrix(m, square=True)
    try:
        inv = np.linalg.inv(m)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc
    if not np.all(np.isfinite(inv)):
        raise SingularMatrixError("inverse overflowed")
    cond = np.linalg.norm(m, 1) * np.linalg.norm(inv, 1)
    if cond > COND_LIMIT:
        raise SingularMatrixError(f"condition estimate {cond:.3e} exceeds limit")
    return inv


def logdet(m) -> float:
    """log det M, computed via factorization (LAPACK slogdet), never by
    cofactor expansion.

    Raises NonPositiveDeterminantError when det M <= 0; intended use is
    symmetric positive definite matrices, where this equals the sum of the
    logs of the LDU pivots.
    """
    m = as_matrix(m, square=True)
    sign, value = np.linalg.slogdet(m)
    if sign <= 0:
        raise NonPositiveDeterminantError("determinant is not positive")
    return float(value)


def numerical_rank(m, tol: float) -> int:
    """Number of singular values exceeding tol times the largest one.

    tol must be positive.  The matrix may be rectangular.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    m = as_matrix(m)
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def principal_submatrix(m, indices: Sequence[int]) -> np.ndarray:
    """Copy of the square submatrix on the given row/column index set."""
    m = as_matrix(m, square=True)
    idx = list(indices)
    n = m.shape[0]
    if any(i < 0 or i >= n for i in idx):
        raise IndexError(f"indices out of range for n={n}: {idx}")
    return m[np.ix_(idx, idx)].copy()
