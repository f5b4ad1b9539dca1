"""Dense symmetric solves for the LOOCV estimator.

Thin wrapper over LAPACK (via scipy): Cholesky first, pivoted LU if the
matrix turns out not to be numerically SPD.  A matrix is declared singular
when a pivot drops below ``PIVOT_RTOL`` times the largest initial pivot.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DomainError, NumericalRankError

PIVOT_RTOL = 1e-14
SYMMETRY_ATOL = 1e-12


@dataclass(frozen=True)
class Factorization:
    n: int
    method: str  # "cholesky" or "lu"
    factors: tuple

    def solve(self, b):
        return solve(self, b)


def as_sym_matrix(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix has non-finite entries")
    if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_ATOL:
        raise DomainError("matrix is not symmetric")
    return a


def factorize(a) -> Factorization:
    a = as_sym_matrix(a)
    n = a.shape[0]
    scale = np.max(np.abs(np.diag(a)), initial=0.0)
    if scale == 0.0:
        raise NumericalRankError("matrix has a zero diagonal")
    tol = PIVOT_RTOL * scale
    try:
        c, lower = scipy.linalg.cho_factor(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        pass
    else:
        piv = np.diag(c) ** 2
        if np.min(piv) > tol:
            return Factorization(n, "cholesky", (c, lower))
    with warnings.catch_warnings():
        # singularity is reported through NumericalRankError below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, perm = scipy.linalg.lu_factor(a, check_finite=False)
    if np.min(np.abs(np.diag(lu))) <= tol:
        raise NumericalRankError(f"matrix of order {n} is singular to working precision")
    return Factorization(n, "lu", (lu, perm))


def solve(f: Factorization, b) -> np.ndarray:
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != f.n:
        raise DomainError(f"right-hand side has length {b.shape[0]}, expected {f.n}")
    if f.method == "cholesky":
        return scipy.linalg.cho_solve(f.factors, b, check_finite=False)
    return scipy.linalg.lu_solve(f.factors, b, check_finite=False)


def inverse_diagonal(f: Factorization) -> np.ndarray:
    """Diagonal of A^-1 from solves against the unit vectors."""
    x = solve(f, np.eye(f.n))
    return np.ascontiguousarray(np.diag(x))
