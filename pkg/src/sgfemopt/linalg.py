"""Direct sparse solves with a residual contract."""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverFailure

RESIDUAL_TOL = 1e-12


def factorized(matrix):
    """LU-factorize a sparse matrix, wrapping breakdowns as SolverFailure."""
    try:
        lu = spla.splu(sp.csc_matrix(matrix))
    except RuntimeError as exc:
        raise SolverFailure(f"factorization failed: {exc}") from exc
    return lu


def linear_solve(system, rhs, lu=None):
    """Solve system @ x = rhs to relative residual 1e-12.

    One step of iterative refinement is applied if the direct solve falls
    short; a residual still above tolerance raises SolverFailure with the
    achieved value.
    """
    A = sp.csr_matrix(system)
    b = np.asarray(rhs, float)
    if lu is None:
        lu = factorized(A)
    x = lu.solve(b)
    scale = max(float(np.linalg.norm(b)), 1e-300)
    res = float(np.linalg.norm(A @ x - b)) / scale
    if res > RESIDUAL_TOL:
        x = x + lu.solve(b - A @ x)
        res = float(np.linalg.norm(A @ x - b)) / scale
    if not np.isfinite(res) or res > RESIDUAL_TOL:
        raise SolverFailure(f"relative residual {res:.3e} exceeds {RESIDUAL_TOL:.0e}")
    return x
