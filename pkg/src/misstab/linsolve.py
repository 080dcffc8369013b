"""Solvers for the NMAR odds systems.

Fitting an own-level (NMAR) missingness mechanism reduces to the linear
system  A x = b,  where A holds baseline fitted counts (rows: cells of
the supplementary margin, columns: levels of the NMAR variable) and b
holds the supplementary counts.  Depending on the table shape the
system is square, overdetermined, or underdetermined; the conventions
are exact solve, ordinary least squares (left inverse), and minimum
Euclidean norm (right inverse), respectively.
"""

from __future__ import annotations

import numpy as np

SQUARE = "square"
LEAST_SQUARES = "least-squares"
MIN_NORM = "minimum-norm"


class SingularSystemError(ValueError):
    """The odds system matrix is rank deficient."""


def solve_odds_system(matrix: np.ndarray, rhs: np.ndarray
                      ) -> tuple[np.ndarray, str]:
    """Solve A x = b, returning (solution, regime tag).

    Square systems are solved exactly; rectangular ones via SVD-based
    least squares, which yields the ordinary-least-squares solution
    when overdetermined and the minimum-norm solution when
    underdetermined.  Negative components are returned as-is; boundary
    handling is the caller's concern.
    """
    A = np.asarray(matrix, dtype=float)
    b = np.asarray(rhs, dtype=float).ravel()
    if A.ndim != 2 or A.shape[0] != b.size:
        raise ValueError(f"shape mismatch: {A.shape} vs {b.shape}")
    rows, cols = A.shape
    rank = np.linalg.matrix_rank(A)
    if rank < min(rows, cols):
        deficient = "rows" if rows <= cols else "columns"
        raise SingularSystemError(
            f"odds system is rank deficient (rank {rank} < "
            f"{min(rows, cols)} {deficient}); a zero or collinear "
            "fully observed layer makes the mechanism unidentifiable")
    if rows == cols:
        return np.linalg.solve(A, b), SQUARE
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    return x, LEAST_SQUARES if rows > cols else MIN_NORM
