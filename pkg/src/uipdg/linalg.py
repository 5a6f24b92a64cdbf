"""Sparse storage helpers and linear solvers with a residual contract."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import SolverError

DENSE_LIMIT = 2000
DIRECT_LIMIT = 250_000
REFINE_STEPS = 3
KRYLOV_RESTARTS = 5
METHODS = ("auto", "dense", "cg", "bicgstab", "direct")


@dataclass
class SolveReport:
    method: str
    iterations: int
    residual: float
    wall_time: float
    converged: bool = True
    history: list = field(default_factory=list)


def as_csr(A) -> sp.csr_matrix:
    """Canonical CSR: sorted indices, duplicates summed, finite values."""
    A = sp.csr_matrix(A)
    A.sum_duplicates()
    A.sort_indices()
    if not np.all(np.isfinite(A.data)):
        raise ValueError("matrix has non-finite entries")
    return A


def is_symmetric(A, rtol=1e-12) -> bool:
    A = sp.csr_matrix(A)
    scale = abs(A).max() if A.nnz else 0.0
    diff = A - A.T
    return (abs(diff).max() if diff.nnz else 0.0) <= rtol * max(scale, np.finfo(float).tiny)


def block_jacobi(A, block_size: int) -> spla.LinearOperator:
    """Preconditioner applying the inverse of each diagonal block."""
    n = A.shape[0]
    if block_size < 1 or n % block_size:
        block_size = 1
    nb = n // block_size
    A = sp.csr_matrix(A)
    idx = np.arange(n).reshape(nb, block_size)
    rows = np.repeat(idx, block_size, axis=1)
    cols = np.tile(idx, (1, block_size))
    blocks = np.asarray(A[rows.ravel(), cols.ravel()]).reshape(nb, block_size, block_size)
    inv = np.linalg.inv(blocks)

    def apply(x):
        return np.einsum("bij,bj->bi", inv, np.asarray(x).reshape(nb, block_size)).ravel()

    return spla.LinearOperator(A.shape, matvec=apply, dtype=float)


def _krylov(A, b, method, tol, max_iter, M, history):
    """Preconditioned CG / BiCGSTAB restarted from the current iterate until the
    true residual meets ``tol`` (the recursive residual drifts on stiff systems)."""
    krylov = spla.cg if method == "cg" else spla.bicgstab
    bnorm = np.linalg.norm(b)
    x = np.zeros_like(b)
    for _ in range(KRYLOV_RESTARTS):
        r = b - A @ x
        if np.linalg.norm(r) <= tol * bnorm:
            break
        budget = max_iter - len(history)
        if budget <= 0:
            break
        rnorm = np.linalg.norm(r)

        def callback(xk, x0=x, r0=rnorm):
            history.append(float(np.linalg.norm(A @ (x0 + xk) - b) / bnorm))

        dx, info = krylov(A, r, rtol=0.1 * tol * bnorm / rnorm, atol=0.0, maxiter=budget, M=M, callback=callback)
        if info < 0 or not np.all(np.isfinite(dx)):
            raise SolverError(f"{method} breakdown", SolveReport(method, len(history), np.nan, 0.0, False, history))
        x = x + dx
    return x


def solve(A, b, tol=1e-10, max_iter=None, symmetric=None, method="auto", block_size=1):
    """Solve A x = b and check ``||A x - b|| <= tol ||b||``.

    ``method="auto"`` uses a dense solve up to ``DENSE_LIMIT`` unknowns, a sparse
    LU factorization with iterative refinement up to ``DIRECT_LIMIT``, and above
    that preconditioned CG for symmetric matrices or BiCGSTAB otherwise, both with
    element-block Jacobi preconditioning.  Raises :class:`SolverError` with a
    report (including the residual history) when the contract fails.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    A = as_csr(A)
    b = np.asarray(b, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or b.shape != (n,):
        raise ValueError("A must be square and match b")
    bnorm = np.linalg.norm(b)
    t0 = time.perf_counter()
    if bnorm == 0.0:
        return np.zeros(n), SolveReport("trivial", 0, 0.0, 0.0)
    if symmetric is None:
        symmetric = is_symmetric(A)
    if method == "auto":
        if n <= DENSE_LIMIT:
            method = "dense"
        elif n <= DIRECT_LIMIT:
            method = "direct"
        else:
            method = "cg" if symmetric else "bicgstab"

    history = []
    iterations = 0
    if method == "dense":
        x = scipy.linalg.solve(A.toarray(), b, assume_a="sym" if symmetric else "gen")
        iterations = 1
    elif method == "direct":
        try:
            lu = spla.splu(A.tocsc())
        except RuntimeError as exc:
            raise SolverError(f"sparse LU failed: {exc}", SolveReport(method, 0, np.nan, 0.0, False)) from exc
        x = lu.solve(b)
        iterations = 1
        # iterative refinement recovers digits lost to pivot growth
        for _ in range(REFINE_STEPS):
            r = b - A @ x
            history.append(float(np.linalg.norm(r) / bnorm))
            if history[-1] <= 0.01 * tol:
                break
            x = x + lu.solve(r)
            iterations += 1
    else:
        M = block_jacobi(A, block_size)
        x = _krylov(A, b, method, tol, max_iter or 20 * n, M, history)
        iterations = len(history)
    residual = float(np.linalg.norm(A @ x - b) / bnorm)
    report = SolveReport(method, iterations, residual, time.perf_counter() - t0, residual <= tol, history)
    if not np.all(np.isfinite(x)) or residual > tol:
        raise SolverError(f"{method} failed: relative residual {residual:.3e} > {tol:.1e}", report)
    return x, report


def spd_check(A, rtol=1e-12) -> bool:
    """True iff a symmetric factorization of A has only positive pivots."""
    A = as_csr(A)
    if not is_symmetric(A, rtol):
        raise ValueError("spd_check requires a symmetric matrix")
    n = A.shape[0]
    if n <= DENSE_LIMIT:
        try:
            np.linalg.cholesky(A.toarray())
            return True
        except np.linalg.LinAlgError:
            return False
    # symmetric ordering and no pivoting: the U diagonal holds the LDL^T pivots
    try:
        lu = spla.splu(
            A.tocsc(),
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options={"SymmetricMode": True},
        )
    except RuntimeError:
        return False
    if not (np.array_equal(lu.perm_r, lu.perm_c)):
        return False
    return bool(np.all(lu.U.diagonal() > 0))


def dump_matrix_market(A, path) -> None:
    scipy.io.mmwrite(str(path), sp.coo_matrix(A))
