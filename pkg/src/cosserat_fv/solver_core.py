"""Sparse assembly buffers and linear solvers shared by both discretizations."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

PIVOT_TOL = 1e-13
# iterative refinement steps reusing the factorization
REFINE_STEPS = 3
MINRES_RESTARTS = 4


class SingularMatrixError(RuntimeError):
    """Factorization met a (numerically) zero pivot."""


class ConvergenceError(RuntimeError):
    """Iterative solve did not reach the requested residual."""

    def __init__(self, message, iterations, residual):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class TripletMatrix:
    """Growable (row, col, value) list; duplicates are summed on compression."""

    def __init__(self, shape):
        self.shape = tuple(int(s) for s in shape)
        self._rows, self._cols, self._vals = [], [], []

    def add(self, rows, cols, vals):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.broadcast_to(np.asarray(vals, dtype=float), rows.shape).ravel()
        rows, cols = rows.ravel(), cols.ravel()
        if rows.shape != cols.shape:
            raise ValueError("rows and cols must have the same length")
        if rows.size and (rows.min() < 0 or rows.max() >= self.shape[0]
                          or cols.min() < 0 or cols.max() >= self.shape[1]):
            raise IndexError("triplet index out of range")
        self._rows.append(rows)
        self._cols.append(cols)
        self._vals.append(vals)

    def add_block(self, row_idx, col_idx, blocks):
        """Add dense blocks ``blocks[e]`` at ``(row_idx[e], col_idx[e])``."""
        row_idx = np.asarray(row_idx)
        col_idx = np.asarray(col_idx)
        r = np.broadcast_to(row_idx[:, :, None], blocks.shape)
        c = np.broadcast_to(col_idx[:, None, :], blocks.shape)
        self.add(r, c, blocks)

    def __len__(self):
        return sum(len(r) for r in self._rows)


def compress(t: TripletMatrix) -> sps.csr_matrix:
    if not t._rows:
        return sps.csr_matrix(t.shape)
    rows = np.concatenate(t._rows)
    cols = np.concatenate(t._cols)
    vals = np.concatenate(t._vals)
    m = sps.coo_matrix((vals, (rows, cols)), shape=t.shape).tocsr()
    m.sum_duplicates()
    return m


@dataclass
class SolveReport:
    method: str
    residual: float
    iterations: int | None
    wall_time: float


def relative_residual(a, x, b) -> float:
    r = np.linalg.norm(a @ x - b)
    nb = np.linalg.norm(b)
    if nb > 0:
        return float(r / nb)
    nx = np.linalg.norm(x)
    # b = 0: measure against the operator scale
    return float(r / max(nx * abs(a).max(), 1.0)) if nx > 0 else float(r)


def direct_solve(a, b, tol: float = 1e-10) -> tuple[np.ndarray, SolveReport]:
    """Sparse LU solve with an explicit singularity check on the pivots."""
    t0 = time.perf_counter()
    a = sps.csc_matrix(a)
    b = np.asarray(b, dtype=float)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got {a.shape}")
    if a.shape[0] == 0:
        return np.zeros(0), SolveReport("direct", 0.0, None, 0.0)
    # symmetric equilibration so the pivot test sees geometry, not parameter contrast
    rmax = np.sqrt(abs(a).max(axis=1).toarray().ravel())
    if np.any(rmax == 0):
        raise SingularMatrixError(f"row {int(np.flatnonzero(rmax == 0)[0])} is identically zero")
    scale = sps.diags(1.0 / rmax)
    try:
        lu = spla.splu(sps.csc_matrix(scale @ a @ scale))
    except RuntimeError as exc:
        raise SingularMatrixError(str(exc)) from exc
    piv = np.abs(lu.U.diagonal())
    if piv.min() <= PIVOT_TOL * piv.max():
        raise SingularMatrixError(
            f"pivot {piv.min():.3e} below {PIVOT_TOL:g} x max pivot {piv.max():.3e}")
    x = scale @ lu.solve(scale @ b)
    res = relative_residual(a, x, b)
    for _ in range(REFINE_STEPS):
        if not np.isfinite(res) or res <= tol:
            break
        x = x + scale @ lu.solve(scale @ (b - a @ x))
        res = relative_residual(a, x, b)
    if not np.isfinite(res) or res > tol:
        raise SingularMatrixError(f"direct solve residual {res:.3e} exceeds {tol:g}")
    return x, SolveReport("direct", res, None, time.perf_counter() - t0)


def minres_solve(a, b, tol: float = 1e-9, maxiter: int | None = None) -> tuple[np.ndarray, SolveReport]:
    """MINRES for symmetric (possibly indefinite) systems; raises on failure."""
    t0 = time.perf_counter()
    a = sps.csr_matrix(a)
    b = np.asarray(b, dtype=float)
    maxiter = 20 * a.shape[0] if maxiter is None else maxiter
    count = [0]

    def cb(_):
        count[0] += 1

    # scipy stops on its own residual estimate; restart from the iterate while
    # the true residual is above tol and iterations remain
    x = np.zeros_like(b)
    res = relative_residual(a, x, b)
    for _ in range(MINRES_RESTARTS):
        x, _ = spla.minres(a, b, x0=x, rtol=tol * 0.1, maxiter=maxiter - count[0], callback=cb)
        res = relative_residual(a, x, b)
        if res <= tol or count[0] >= maxiter:
            break
    if not np.isfinite(res) or res > tol:
        raise ConvergenceError(
            f"MINRES stopped after {count[0]} iterations with residual {res:.3e} > {tol:g}",
            count[0], res)
    return x, SolveReport("iterative", res, count[0], time.perf_counter() - t0)


def solve(a, b, method: str = "direct", tol: float | None = None):
    if method == "direct":
        return direct_solve(a, b, 1e-10 if tol is None else tol)
    if method == "iterative":
        return minres_solve(a, b, 1e-9 if tol is None else tol)
    raise ValueError(f"unknown solver {method!r}")
