"""Quasi-reversibility reconstruction of the spatial source factor.

With ``v = u_t`` the unknown source factor drops out of the parabolic
equation and reappears only through ``v(x, 0) = f(x, 0) p(x)``.  ``v`` is
recovered from the lateral Cauchy data (``v = 0`` and ``dv/dnu = G_t`` on
the boundary) as the minimiser of a Tikhonov-regularised least-squares
functional, discretised on the lineup vector and solved through its normal
equations.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError, PreconditionError
from .fields import (
    FLUX_RATE,
    BoundaryFluxSeries,
    SpaceTimeField,
    SpatialField,
    from_lineup,
    time_derivative_array,
)
from .grid import GridSpec, boundary_index_arrays, inward_neighbors
from .sparse import SparseMatrixCSR, from_triplets, gram_accumulate, solve_direct, solve_spd

__all__ = [
    "QrProblem",
    "QrSolution",
    "QrSystem",
    "assemble_operator_D",
    "assemble_gradient",
    "assemble_dirichlet_K1",
    "assemble_neumann_K2",
    "assemble_system",
    "objective_terms",
    "solve_qr",
]

DEFAULT_EPSILON = 1e-8


def _ordinals(spec: GridSpec) -> np.ndarray:
    """0-based lineup ordinals arranged on the storage grid."""
    return np.arange(spec.size).reshape(spec.shape)


def _check_f0(f: np.ndarray) -> None:
    f0 = f[:, :, 0]
    if np.min(np.abs(f0)) == 0.0:
        k = tuple(int(v) + 1 for v in np.argwhere(f0 == 0.0)[0])
        raise PreconditionError(f"f(x, 0) vanishes at node {k}")


def assemble_operator_D(spec: GridSpec, c, f, f_t=None) -> SparseMatrixCSR:
    """Matrix of the discrete operator ``L`` acting on lineup vectors.

    Rows exist for interior nodes at time levels ``2..nt+1``; every other row
    is zero.  Spatial neighbours are taken at the same time level as the row.

    Parameters
    ----------
    c : SpatialField or array
        Zeroth-order coefficient.
    f : SpaceTimeField or array
        Known time factor of the source; ``f(., 0)`` must not vanish.
    f_t : SpaceTimeField or array, optional
        Time derivative of ``f``.  Computed with second-order finite
        differences when omitted.
    """
    c = np.asarray(c, dtype=float)
    f = np.asarray(f, dtype=float)
    _check_f0(f)
    f_t = time_derivative_array(f, spec.dt) if f_t is None else np.asarray(f_t, dtype=float)

    idx = _ordinals(spec)
    dt, dx2 = spec.dt, spec.dx**2
    row = idx[1:-1, 1:-1, 1:]

    ratio = f_t[1:-1, 1:-1, 1:] / f[1:-1, 1:-1, :1]
    diag = np.broadcast_to(1.0 / dt + 4.0 / dx2 - c[1:-1, 1:-1, None], row.shape)

    blocks = [
        (row, diag),
        (idx[1:-1, 1:-1, :-1], np.full(row.shape, -1.0 / dt)),
        (np.broadcast_to(idx[1:-1, 1:-1, :1], row.shape), -ratio),
        (idx[2:, 1:-1, 1:], np.full(row.shape, -1.0 / dx2)),
        (idx[:-2, 1:-1, 1:], np.full(row.shape, -1.0 / dx2)),
        (idx[1:-1, 2:, 1:], np.full(row.shape, -1.0 / dx2)),
        (idx[1:-1, :-2, 1:], np.full(row.shape, -1.0 / dx2)),
    ]
    rows = np.concatenate([row.ravel()] * len(blocks))
    cols = np.concatenate([col.ravel() for col, _ in blocks])
    vals = np.concatenate([np.ravel(v) for _, v in blocks])
    return from_triplets(rows, cols, vals, (spec.size, spec.size))


def assemble_gradient(spec: GridSpec) -> tuple[SparseMatrixCSR, SparseMatrixCSR]:
    """Backward-difference gradient matrices ``(Dx, Dy)``.

    Populated rows are the nodes with ``2 <= i, j <= nx + 1`` at every level.
    """
    idx = _ordinals(spec)
    h = 1.0 / spec.dx
    row = idx[1:, 1:, :].ravel()
    ones = np.full(row.shape, h)
    n = (spec.size, spec.size)
    Dx = from_triplets(np.concatenate([row, row]), np.concatenate([row, idx[:-1, 1:, :].ravel()]),
                       np.concatenate([ones, -ones]), n)
    Dy = from_triplets(np.concatenate([row, row]), np.concatenate([row, idx[1:, :-1, :].ravel()]),
                       np.concatenate([ones, -ones]), n)
    return Dx, Dy


def _boundary_ordinals(spec: GridSpec) -> np.ndarray:
    idx = _ordinals(spec)
    ii, jj = boundary_index_arrays(spec)
    return idx[ii, jj, :]


def assemble_dirichlet_K1(spec: GridSpec) -> SparseMatrixCSR:
    """Unit diagonal at every boundary node and time level."""
    b = _boundary_ordinals(spec).ravel()
    return from_triplets(b, b, np.ones(b.shape), (spec.size, spec.size))


def assemble_neumann_K2(spec: GridSpec) -> SparseMatrixCSR:
    """One-sided outward normal derivative ``(v_b - v_inward) / dx`` at boundary rows."""
    idx = _ordinals(spec)
    b = _boundary_ordinals(spec).ravel()
    ni, nj = inward_neighbors(spec)
    nb = idx[ni, nj, :].ravel()
    h = np.full(b.shape, 1.0 / spec.dx)
    return from_triplets(np.concatenate([b, b]), np.concatenate([b, nb]),
                         np.concatenate([h, -h]), (spec.size, spec.size))


@dataclass
class QrProblem:
    """Inputs of one inverse-source reconstruction.

    Attributes
    ----------
    weighted_gram : bool
        Multiply the interior terms of the normal equations by ``dt * dx**2``
        (the quadrature weight of the continuous functional).  Off by default.
    solver : str
        ``"direct"`` (sparse factorisation with refinement) or ``"cg"``
        (Jacobi-PCG; only practical for large ``epsilon`` or tiny grids).
    """

    spec: GridSpec
    c: SpatialField
    f: SpaceTimeField
    data_gt: BoundaryFluxSeries
    epsilon: float = DEFAULT_EPSILON
    f_t: SpaceTimeField | None = None
    weighted_gram: bool = False
    tol: float = 1e-10
    max_iter: int | None = None
    solver: str = "direct"

    def __post_init__(self):
        if self.solver not in ("direct", "cg"):
            raise PreconditionError(f"unknown solver {self.solver!r}")
        if not self.epsilon > 0:
            raise PreconditionError(f"epsilon must be positive, got {self.epsilon}")
        if self.data_gt.kind != FLUX_RATE:
            raise PreconditionError("data_gt must be a flux-rate (G_t) series")
        for name in ("c", "f", "data_gt"):
            if getattr(self, name).spec != self.spec:
                raise DomainError(f"{name} lives on a different grid")
        _check_f0(np.asarray(self.f))


class QrSystem(NamedTuple):
    D: SparseMatrixCSR
    Dx: SparseMatrixCSR
    Dy: SparseMatrixCSR
    K1: SparseMatrixCSR
    K2: SparseMatrixCSR
    g: np.ndarray
    A: SparseMatrixCSR
    b: np.ndarray
    interior_weight: float
    epsilon: float


@dataclass
class QrSolution:
    v: SpaceTimeField
    p: SpatialField
    residual: float
    iterations: int
    report: dict = field(default_factory=dict)


def assemble_system(problem: QrProblem) -> QrSystem:
    spec = problem.spec
    D = assemble_operator_D(spec, problem.c, problem.f, problem.f_t)
    Dx, Dy = assemble_gradient(spec)
    K1 = assemble_dirichlet_K1(spec)
    K2 = assemble_neumann_K2(spec)
    g = problem.data_gt.to_lineup()
    w = spec.dt * spec.dx**2 if problem.weighted_gram else 1.0
    eps = problem.epsilon
    A = gram_accumulate(
        [(D, w), (K1, 1.0), (K2, 1.0), (Dx, w * eps), (Dy, w * eps)],
        identity_weight=w * eps,
    )
    b = K2.T @ g
    return QrSystem(D, Dx, Dy, K1, K2, g, A, b, w, eps)


def objective_terms(system: QrSystem, vec) -> tuple[float, float]:
    """Split the quadratic at ``vec`` into ``(misfit, penalty)``.

    ``misfit = w|D v|^2 + |K1 v|^2 + |K2 v - g|^2`` and
    ``penalty = w(|v|^2 + |Dx v|^2 + |Dy v|^2)`` with ``w`` the interior
    weight; the minimised functional is ``misfit + epsilon * penalty``.
    """
    vec = np.asarray(vec, dtype=float)
    w = system.interior_weight
    misfit = (w * np.sum((system.D @ vec) ** 2) + np.sum((system.K1 @ vec) ** 2)
              + np.sum((system.K2 @ vec - system.g) ** 2))
    penalty = w * (vec @ vec + np.sum((system.Dx @ vec) ** 2) + np.sum((system.Dy @ vec) ** 2))
    return float(misfit), float(penalty)


def solve_qr(problem: QrProblem, x0=None) -> QrSolution:
    """Reconstruct ``v`` and ``p = v(., 0) / f(., 0)`` from flux-rate data.

    ``x0`` is a starting lineup vector for the CG solver and is ignored by
    the direct one.
    """
    t0 = time.perf_counter()
    system = assemble_system(problem)
    t1 = time.perf_counter()
    if problem.solver == "cg":
        sol = solve_spd(system.A, system.b, tol=problem.tol, max_iter=problem.max_iter, x0=x0)
    else:
        sol = solve_direct(system.A, system.b, tol=problem.tol)
    t2 = time.perf_counter()
    v = from_lineup(problem.spec, sol.x)
    f0 = np.asarray(problem.f)[:, :, 0]
    p = SpatialField(problem.spec, v.values[:, :, 0] / f0)
    report = {
        "epsilon": problem.epsilon,
        "solver": problem.solver,
        "weighted_gram": problem.weighted_gram,
        "unknowns": problem.spec.size,
        "nnz": int(system.A.nnz),
        "iterations": sol.iterations,
        "residual": sol.residual,
        "assembly_seconds": t1 - t0,
        "solve_seconds": t2 - t1,
    }
    return QrSolution(v, p, sol.residual, sol.iterations, report)
