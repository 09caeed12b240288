"""Sparse linear solves: direct LU by default, BiCGStab as an option."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import bicgstab, splu


class SolverError(RuntimeError):
    """Linear solve failed; carries the residual achieved, if any."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass
class LinearSolveOptions:
    method: str = "direct"  # "direct" or "bicgstab"
    tol: float = 1e-12
    max_iter: int = 2000

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.method not in ("direct", "bicgstab"):
            raise ValueError(f"unknown method {self.method!r}")


class Factorization:
    """Reusable sparse LU factorization (immutable after construction)."""

    def __init__(self, matrix):
        self._shape = matrix.shape
        try:
            self._lu = splu(sparse.csc_matrix(matrix))
        except RuntimeError as exc:
            raise SolverError(f"LU factorization failed: {exc}") from exc

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self._lu.solve(np.asarray(rhs, dtype=float))


def solve(matrix, rhs, opts: LinearSolveOptions | None = None) -> np.ndarray:
    """Solve matrix @ u = rhs.

    The direct method is backward stable; the Krylov method stops at a
    relative residual of ``opts.tol`` and raises on non-convergence.
    """
    opts = opts or LinearSolveOptions()
    rhs = np.asarray(rhs, dtype=float)
    mat = sparse.csr_matrix(matrix)
    if opts.method == "direct":
        u = Factorization(mat).solve(rhs)
        res = np.linalg.norm(mat @ u - rhs)
        if not np.all(np.isfinite(u)):
            raise SolverError("direct solve produced non-finite values (singular matrix?)", res)
        return u
    precond = sparse.diags(1.0 / mat.diagonal())
    u, info = bicgstab(mat, rhs, rtol=opts.tol, atol=0.0, maxiter=opts.max_iter, M=precond)
    res = np.linalg.norm(mat @ u - rhs)
    if info != 0:
        raise SolverError(f"BiCGStab did not converge (info={info})", res)
    return u
