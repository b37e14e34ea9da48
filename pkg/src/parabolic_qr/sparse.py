"""Sparse matrices in CSR form and solvers for symmetric positive definite systems.

Storage is delegated to :class:`scipy.sparse.csr_matrix` (its ``indptr``,
``indices`` and ``data`` arrays are the usual CSR triplet).  Two solvers are
offered: Jacobi-preconditioned conjugate gradients, written out here, and a
sparse factorisation (CHOLMOD when scikit-sparse is installed, SuperLU
otherwise) followed by iterative refinement.  The regularised normal
equations of the inverse problem are far too ill-conditioned for CG at the
default regularisation weight, so they use the factorisation.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, DomainError, SolverError

__all__ = [
    "SparseMatrixCSR",
    "SolveResult",
    "from_triplets",
    "matvec",
    "gram_accumulate",
    "solve_spd",
    "solve_direct",
    "has_cholmod",
    "default_max_iter",
    "asymmetry",
    "write_matrix_market",
]

SparseMatrixCSR = sp.csr_matrix


class SolveResult(NamedTuple):
    x: np.ndarray
    iterations: int
    residual: float


def from_triplets(rows, cols, vals, shape) -> SparseMatrixCSR:
    """Assemble a CSR matrix from coordinate triplets; duplicates are summed."""
    A = sp.coo_matrix((np.asarray(vals, dtype=float), (np.asarray(rows), np.asarray(cols))), shape=shape).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def matvec(A: SparseMatrixCSR, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != A.shape[1]:
        raise DomainError(f"cannot multiply {A.shape} matrix by vector of shape {x.shape}")
    return A @ x


def gram_accumulate(terms, identity_weight: float = 0.0) -> SparseMatrixCSR:
    """Return ``sum_k w_k A_k^T A_k + identity_weight * I``.

    Parameters
    ----------
    terms : iterable of (matrix, weight)
    identity_weight : float
        Coefficient of the identity added to the sum.
    """
    terms = list(terms)
    if not terms:
        raise DomainError("gram_accumulate needs at least one term")
    n = terms[0][0].shape[1]
    G = sp.csr_matrix((n, n))
    for A, w in terms:
        if A.shape[1] != n:
            raise DomainError(f"term with {A.shape[1]} columns does not match {n}")
        A = sp.csr_matrix(A)
        G = G + w * (A.T @ A).tocsr()
    if identity_weight:
        G = G + identity_weight * sp.identity(n, format="csr")
    G = sp.csr_matrix(G)
    G.sum_duplicates()
    G.sort_indices()
    return G


def asymmetry(A: SparseMatrixCSR) -> float:
    """Max-abs entry of ``A - A^T``."""
    d = (A - A.T).tocoo()
    return float(np.max(np.abs(d.data))) if d.nnz else 0.0


def default_max_iter(n: int) -> int:
    return max(2000, int(10 * math.sqrt(n)))


def solve_spd(A: SparseMatrixCSR, b, tol: float = 1e-10, max_iter: int | None = None,
              x0=None, check_symmetry: bool = False) -> SolveResult:
    """Solve ``A x = b`` for symmetric positive definite ``A`` by Jacobi-PCG.

    Stops when ``||A x - b|| / ||b|| <= tol``.  Raises
    :class:`ConvergenceError` carrying the achieved residual when
    ``max_iter`` iterations do not suffice.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if A.shape != (n, n):
        raise DomainError(f"matrix {A.shape} does not match right-hand side of length {n}")
    if not tol > 0:
        raise DomainError("tol must be positive")
    if check_symmetry and asymmetry(A) > 1e-12 * max(1.0, abs(A).max()):
        raise DomainError("matrix is not symmetric")
    if max_iter is None:
        max_iter = default_max_iter(n)

    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return SolveResult(np.zeros(n), 0, 0.0)

    diag = A.diagonal()
    if np.any(diag <= 0):
        raise DomainError("nonpositive diagonal entry; matrix is not SPD")
    minv = 1.0 / diag

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    res = np.linalg.norm(r) / bnorm
    if res <= tol:
        return SolveResult(x, 0, float(res))
    z = minv * r
    p = z.copy()
    rz = r @ z
    for it in range(1, max_iter + 1):
        q = A @ p
        alpha = rz / (p @ q)
        x += alpha * p
        r -= alpha * q
        res = np.linalg.norm(r) / bnorm
        if res <= tol:
            # confirm with the true residual; recursive r drifts in long runs
            true_res = np.linalg.norm(b - A @ x) / bnorm
            if true_res <= tol:
                return SolveResult(x, it, float(true_res))
            r = b - A @ x
        z = minv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    res = float(np.linalg.norm(b - A @ x) / bnorm)
    raise ConvergenceError(
        f"PCG did not reach tol={tol:g} in {max_iter} iterations (residual {res:.3e})",
        residual=res, iterations=max_iter,
    )


def has_cholmod() -> bool:
    try:
        import sksparse.cholmod  # noqa: F401
    except ImportError:
        return False
    return True


def _factorize(A: SparseMatrixCSR):
    A = sp.csc_matrix(A)
    if has_cholmod():
        from sksparse.cholmod import CholmodError, CholmodNotPositiveDefiniteError, cholesky

        try:
            return cholesky(A)
        except CholmodNotPositiveDefiniteError:
            pass  # numerically indefinite pivots; LU still works
        except CholmodError as exc:
            raise SolverError(f"sparse Cholesky failed for n={A.shape[0]}, nnz={A.nnz}: {exc}") from exc
    try:
        lu = spla.splu(A, permc_spec="COLAMD")
    except (MemoryError, RuntimeError) as exc:
        raise SolverError(f"sparse LU failed for n={A.shape[0]}, nnz={A.nnz}: {exc}") from exc
    return lu.solve


def solve_direct(A: SparseMatrixCSR, b, tol: float = 1e-10, refine_steps: int = 3) -> SolveResult:
    """Factorise ``A`` and solve, refining until ``||A x - b|| / ||b|| <= tol``.

    The iteration count reported is the number of refinement steps taken.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if A.shape != (n, n):
        raise DomainError(f"matrix {A.shape} does not match right-hand side of length {n}")
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return SolveResult(np.zeros(n), 0, 0.0)
    solve = _factorize(A)
    x = solve(b)
    res = np.linalg.norm(b - A @ x) / bnorm
    steps = 0
    while res > tol and steps < refine_steps:
        x = x + solve(b - A @ x)
        res = np.linalg.norm(b - A @ x) / bnorm
        steps += 1
    if res > tol:
        raise ConvergenceError(f"direct solve residual {res:.3e} exceeds tol={tol:g}",
                               residual=float(res), iterations=steps)
    return SolveResult(x, steps, float(res))


def write_matrix_market(path, A: SparseMatrixCSR) -> None:
    scipy.io.mmwrite(str(path), sp.coo_matrix(A))
