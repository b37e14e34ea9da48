"""Forward parabolic solver ``u_t = Laplace(u) + c u + s`` and boundary flux data.

Crank-Nicolson in time (backward Euler on request) and the 5-point Laplacian
in space.  Each step solves a symmetric positive definite system for the
interior values with PCG.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, ConvergenceError, DomainError, PreconditionError
from .fields import (
    FLUX,
    BoundaryFluxSeries,
    SpaceTimeField,
    SpatialField,
    sample,
    time_derivative,
)
from .grid import GridSpec, boundary_index_arrays, inward_neighbors
from .sparse import solve_spd

__all__ = [
    "ForwardProblem",
    "solve_forward",
    "extract_normal_flux",
    "restrict",
    "simulate_flux",
    "generate_data",
]


@dataclass
class ForwardProblem:
    """Initial-boundary value problem on ``spec``.

    ``dirichlet`` has one row per node of ``boundary_nodes(spec)`` and one
    column per time level; ``None`` means homogeneous.  ``source=None`` means
    no source.
    """

    spec: GridSpec
    c: SpatialField
    initial: SpatialField
    source: SpaceTimeField | None = None
    dirichlet: np.ndarray | None = None

    def __post_init__(self):
        spec = self.spec
        if self.dirichlet is None:
            self.dirichlet = np.zeros((4 * spec.nx, spec.nt + 1))
        self.dirichlet = np.asarray(self.dirichlet, dtype=float)
        if self.dirichlet.shape != (4 * spec.nx, spec.nt + 1):
            raise DomainError(f"dirichlet data has shape {self.dirichlet.shape}")
        for name in ("c", "initial", "source"):
            fld = getattr(self, name)
            if fld is not None and fld.spec != spec:
                raise DomainError(f"{name} lives on a different grid")
        ii, jj = boundary_index_arrays(spec)
        gap = np.max(np.abs(self.dirichlet[:, 0] - np.asarray(self.initial)[ii, jj]))
        if gap > 1e-12:
            raise PreconditionError(f"dirichlet data at t=0 differ from initial data by {gap:.3e}")


def _interior_laplacian(spec: GridSpec) -> sp.csr_matrix:
    m = spec.nx - 1
    e = np.ones(m)
    T = sp.diags([e[:-1], -2 * e, e[:-1]], [-1, 0, 1])
    Im = sp.identity(m)
    return ((sp.kron(T, Im) + sp.kron(Im, T)) / spec.dx**2).tocsr()


def _laplacian_full(u: np.ndarray, dx: float) -> np.ndarray:
    """5-point Laplacian at interior nodes of a full spatial array."""
    return (u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2] - 4.0 * u[1:-1, 1:-1]) / dx**2


SCHEMES = {"crank-nicolson": 0.5, "backward-euler": 1.0}


def solve_forward(problem: ForwardProblem, scheme: str = "crank-nicolson", tol: float = 1e-13) -> SpaceTimeField:
    """Integrate the problem on all time levels of its grid.

    ``scheme`` is ``"crank-nicolson"`` or ``"backward-euler"``.
    """
    if scheme not in SCHEMES:
        raise ConfigurationError(f"unknown time scheme {scheme!r}; choose from {sorted(SCHEMES)}")
    theta = SCHEMES[scheme]
    spec = problem.spec
    dt, dx = spec.dt, spec.dx
    c_in = np.asarray(problem.c)[1:-1, 1:-1].ravel()
    M = (sp.identity(c_in.size) / dt - theta * (_interior_laplacian(spec) + sp.diags(c_in))).tocsr()
    if np.any(M.diagonal() <= 0):
        raise ConfigurationError("time step too large for the coefficient: step matrix is not positive definite")

    ii, jj = boundary_index_arrays(spec)
    src = None if problem.source is None else np.asarray(problem.source)
    c = np.asarray(problem.c)

    u = np.empty(spec.shape)
    u[:, :, 0] = np.asarray(problem.initial)
    prev = u[:, :, 0]
    for l in range(1, spec.nt + 1):
        nxt = np.zeros(spec.spatial_shape)
        nxt[ii, jj] = problem.dirichlet[:, l]
        rhs = prev[1:-1, 1:-1] / dt + (1 - theta) * (_laplacian_full(prev, dx) + c[1:-1, 1:-1] * prev[1:-1, 1:-1])
        # implicit part of the boundary values enters the right-hand side
        rhs += theta * _laplacian_full(nxt, dx)
        if src is not None:
            rhs += (1 - theta) * src[1:-1, 1:-1, l - 1] + theta * src[1:-1, 1:-1, l]
        try:
            sol = solve_spd(M, rhs.ravel(), tol=tol, x0=prev[1:-1, 1:-1].ravel())
        except ConvergenceError as exc:
            raise ConvergenceError(f"forward step {l}: {exc}", exc.residual, exc.iterations) from exc
        nxt[1:-1, 1:-1] = sol.x.reshape(spec.nx - 1, spec.nx - 1)
        u[:, :, l] = nxt
        prev = nxt
    return SpaceTimeField(spec, u)


def extract_normal_flux(u: SpaceTimeField) -> BoundaryFluxSeries:
    """Outward normal derivative ``(u_b - u_inward) / dx`` at every boundary node."""
    spec = u.spec
    vals = np.asarray(u)
    ii, jj = boundary_index_arrays(spec)
    ni, nj = inward_neighbors(spec)
    return BoundaryFluxSeries(spec, (vals[ii, jj, :] - vals[ni, nj, :]) / spec.dx, FLUX)


def restrict(u: SpaceTimeField, coarse: GridSpec) -> SpaceTimeField:
    """Nearest-node restriction from a grid refined by an integer factor."""
    fine = u.spec
    r = fine.nx // coarse.nx
    if (fine.R, fine.T) != (coarse.R, coarse.T) or fine.nx != r * coarse.nx or fine.nt != r * coarse.nt:
        raise DomainError("grids are not nested by a common integer factor")
    return SpaceTimeField(coarse, np.asarray(u)[::r, ::r, ::r])


def _on_grid(obj, spec: GridSpec, space_time: bool, what: str):
    if callable(obj):
        return sample(obj, spec, space_time=space_time)
    if obj.spec != spec:
        raise DomainError(f"{what} is given on a grid other than the simulation grid; pass a function to resample it")
    return obj


def simulate_flux(spec: GridSpec, c, initial=None, source=None, dirichlet=None,
                  refinement: int = 1, scheme: str = "crank-nicolson") -> BoundaryFluxSeries:
    """Solve a forward problem on a refined grid and return the flux on ``spec``.

    Coefficient, initial value and source may be callables (sampled on the
    refined grid) or fields already on the refined grid.  ``dirichlet`` is a
    callable ``(x, y, t)`` or ``None``.
    """
    fine = spec.refined(refinement)
    c_f = _on_grid(c, fine, False, "c")
    init = SpatialField(fine, np.zeros(fine.spatial_shape)) if initial is None else _on_grid(initial, fine, False, "initial")
    src = None if source is None else _on_grid(source, fine, True, "source")
    bnd = None
    if dirichlet is not None:
        ii, jj = boundary_index_arrays(fine)
        bnd = np.asarray(sample(dirichlet, fine, space_time=True))[ii, jj, :]
    u = solve_forward(ForwardProblem(fine, c_f, init, src, bnd), scheme=scheme)
    return extract_normal_flux(restrict(u, spec))


def generate_data(true_p, f, c, spec: GridSpec, refinement: int = 2,
                  scheme: str = "crank-nicolson") -> BoundaryFluxSeries:
    """Clean flux-rate data ``G_t`` for the source ``f(x, t) p(x)``.

    Homogeneous initial and boundary values.  The forward problem runs on a
    grid refined ``refinement`` times in space and time.
    """
    fine = spec.refined(refinement)
    p_f = _on_grid(true_p, fine, False, "true_p")
    f_f = _on_grid(f, fine, True, "f")
    if np.min(np.abs(np.asarray(f_f)[:, :, 0])) == 0.0:
        raise PreconditionError("f(x, 0) vanishes somewhere")
    source = SpaceTimeField(fine, np.asarray(f_f) * np.asarray(p_f)[:, :, None])
    return time_derivative(simulate_flux(spec, c, source=source, refinement=refinement, scheme=scheme))
