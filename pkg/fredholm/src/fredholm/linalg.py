"""Dense complex LU with a pivot guard, LAPACK 1-norm condition estimate and residuals."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg import LinAlgWarning
from scipy.linalg.lapack import get_lapack_funcs

from .errors import SingularSystemError

PIVOT_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class LUFactorization:
    """P A = L U as returned by ``scipy.linalg.lu_factor``, plus ‖A‖₁."""

    lu: np.ndarray
    piv: np.ndarray
    norm_1: float

    def solve(self, b: np.ndarray) -> np.ndarray:
        return scipy.linalg.lu_solve((self.lu, self.piv), b)

    def rcond(self) -> float:
        """Reciprocal 1-norm condition number from ?gecon (triangular-solve probing)."""
        (gecon,) = get_lapack_funcs(("gecon",), (self.lu,))
        rcond, info = gecon(self.lu, self.norm_1, norm="1")
        if info != 0:
            return 0.0
        return float(rcond)

    def condition_estimate(self) -> float:
        rcond = self.rcond()
        return float("inf") if rcond == 0.0 else 1.0 / rcond


def lu_factor(
    a: np.ndarray,
    pivot_tol: float = PIVOT_TOL,
    error: type[SingularSystemError] = SingularSystemError,
) -> LUFactorization:
    """Factorise with partial pivoting; |U_ii| < pivot_tol · max|a| raises ``error`` at step i."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    threshold = pivot_tol * scale
    if scale == 0.0:
        raise error(0, 0.0, threshold)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=True)
    pivots = np.abs(np.diag(lu))
    small = np.flatnonzero(pivots < threshold)
    if small.size:
        step = int(small[0])
        raise error(step, float(pivots[step]), threshold)
    return LUFactorization(lu=lu, piv=piv, norm_1=float(np.linalg.norm(a, 1)))


def residual_inf(a: np.ndarray, x: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a @ x - b, np.inf))
