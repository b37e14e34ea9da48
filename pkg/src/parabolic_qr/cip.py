"""Coefficient inversion by repeated inverse-source solves.

Reconstructs ``c`` in ``u_t = Laplace(u) + c u`` (initial value ``g > 0``,
boundary values ``g1``) from the boundary flux ``F``.  Each iteration
freezes the current forward solution ``u_n`` as the source factor ``f`` of
a linear inverse-source problem whose solution updates the coefficient.

Update rules
------------
``"background"``
    ``G_n = F - flux(u_n)``, operator ``Laplace + c0``,
    ``c_{n+1} = c0 + p_n``.
``"increment"``
    ``G_n = F - flux(u_n)``, operator ``Laplace + c_n``,
    ``c_{n+1} = c_n + p_n``.
``"fixed_residual"``
    ``G = F - flux(u_0)`` for every ``n``, operator ``Laplace + c0``,
    ``c_{n+1} = c0 + p_n``; a fixed-point iteration for the exact
    relation ``w_t = Laplace(w) + c0 w + (c - c0) u`` with ``w = u - u_0``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import ConfigurationError, DomainError, PreconditionError
from .fields import FLUX, BoundaryFluxSeries, SpaceTimeField, SpatialField, sample, time_derivative
from .forward import ForwardProblem, extract_normal_flux, restrict, simulate_flux, solve_forward
from .grid import GridSpec, boundary_index_arrays
from .noise import NoiseSpec, apply_noise
from .qr_solver import DEFAULT_EPSILON, QrProblem, solve_qr

__all__ = [
    "UPDATE_RULES",
    "CipProblem",
    "CipState",
    "CipIterationError",
    "cip_iterate",
    "relative_difference",
    "generate_cip_data",
    "default_initial",
    "default_boundary",
]

log = logging.getLogger(__name__)

UPDATE_RULES = ("background", "increment", "fixed_residual")


def default_initial(x, y):
    """Initial value ``g = 1``."""
    return np.ones(np.broadcast(x, y).shape)


def default_boundary(x, y, t):
    """Boundary value ``g1 = 1``, compatible with :func:`default_initial`."""
    return np.ones(np.broadcast(x, y, t).shape)


class CipIterationError(RuntimeError):
    """A forward or inverse-source solve failed inside the iteration."""

    def __init__(self, iteration: int, cause: Exception):
        super().__init__(f"iteration {iteration}: {cause}")
        self.iteration = iteration
        self.cause = cause


@dataclass
class CipProblem:
    """Inputs of the coefficient inversion.

    ``g`` is a spatial field or a callable ``(x, y)``; ``g1`` is either an
    array with one row per boundary node and one column per time level, or a
    callable ``(x, y, t)``.  ``noise`` is applied once to ``data_F`` before
    iterating.

    ``forward_refinement > 1`` runs the internal forward solves on a grid
    that many times finer (coefficient prolonged bilinearly, solution
    restricted back), which requires ``g`` and ``g1`` as callables.
    """

    spec: GridSpec
    g: SpatialField | Callable
    g1: np.ndarray | Callable
    data_F: BoundaryFluxSeries
    c0: float = 1.0
    n_star: int = 20
    epsilon: float = DEFAULT_EPSILON
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    update_rule: str = "background"
    keep_history: bool = False
    weighted_gram: bool = False
    forward_refinement: int = 1

    def __post_init__(self):
        if self.update_rule not in UPDATE_RULES:
            raise ConfigurationError(f"unknown update rule {self.update_rule!r}; choose from {UPDATE_RULES}")
        if int(self.n_star) != self.n_star or self.n_star < 1:
            raise ConfigurationError(f"n_star must be a positive integer, got {self.n_star}")
        if int(self.forward_refinement) != self.forward_refinement or self.forward_refinement < 1:
            raise ConfigurationError(f"forward_refinement must be a positive integer, got {self.forward_refinement}")
        self._g_fn = self.g if callable(self.g) else None
        self._g1_fn = self.g1 if callable(self.g1) else None
        if self.forward_refinement > 1 and (self._g_fn is None or self._g1_fn is None):
            raise ConfigurationError("forward_refinement > 1 needs g and g1 as callables")
        if self._g_fn is not None:
            self.g = sample(self._g_fn, self.spec)
        if np.min(np.asarray(self.g)) <= 0:
            raise PreconditionError("initial value g must be positive everywhere")
        if self.data_F.kind != FLUX:
            raise PreconditionError("data_F must be a flux series")
        ii, jj = boundary_index_arrays(self.spec)
        if self._g1_fn is not None:
            self.g1 = np.asarray(sample(self._g1_fn, self.spec, space_time=True))[ii, jj, :]
        self.g1 = np.asarray(self.g1, dtype=float)
        if self.g1.shape != (4 * self.spec.nx, self.spec.nt + 1):
            raise DomainError(f"g1 has shape {self.g1.shape}")
        if np.max(np.abs(self.g1[:, 0] - np.asarray(self.g)[ii, jj])) > 1e-12:
            raise PreconditionError("g1 at t = 0 must equal g on the boundary")


@dataclass
class CipState:
    """Iterate ``c_n`` with its forward solution and the history of ``e_n``.

    ``e_history[k]`` is ``e_{k+1}``.  ``c_history`` holds ``c_0 .. c_n`` when
    history is kept, otherwise only the last two iterates.
    """

    n: int
    c_n: SpatialField
    u_n: SpaceTimeField
    e_history: list[float] = field(default_factory=list)
    c_history: list[SpatialField] = field(default_factory=list)
    residual_norms: list[float] = field(default_factory=list)
    forward_changes: list[float] = field(default_factory=list)
    reports: list[dict] = field(default_factory=list)


def relative_difference(c_new, c_old) -> float:
    """``||c_new - c_old||_inf / ||c_old||_inf``."""
    new, old = np.asarray(c_new, dtype=float), np.asarray(c_old, dtype=float)
    denom = np.max(np.abs(old))
    if denom == 0.0:
        raise DomainError("relative difference undefined for a zero reference")
    return float(np.max(np.abs(new - old)) / denom)


def _prolong(spec: GridSpec, fine: GridSpec, values) -> np.ndarray:
    """Bilinear interpolation of a nodal spatial array onto a nested finer grid."""
    interp = RegularGridInterpolator((spec.x, spec.x), np.asarray(values, dtype=float))
    X, Y = fine.mesh()
    return interp(np.stack([X, Y], axis=-1))


def _forward(problem: CipProblem, c: SpatialField) -> SpaceTimeField:
    spec, r = problem.spec, problem.forward_refinement
    if r == 1:
        return solve_forward(ForwardProblem(spec, c, problem.g, None, problem.g1))
    fine = spec.refined(r)
    ii, jj = boundary_index_arrays(fine)
    g1 = np.asarray(sample(problem._g1_fn, fine, space_time=True))[ii, jj, :]
    c_f = SpatialField(fine, _prolong(spec, fine, c))
    u = solve_forward(ForwardProblem(fine, c_f, sample(problem._g_fn, fine), None, g1))
    return restrict(u, spec)


def cip_iterate(problem: CipProblem) -> CipState:
    """Run ``n_star`` linearisation steps and return the final state."""
    spec = problem.spec
    F = apply_noise(problem.data_F, problem.noise)
    c0 = SpatialField(spec, np.full(spec.spatial_shape, float(problem.c0)))
    try:
        u = _forward(problem, c0)
    except Exception as exc:
        raise CipIterationError(0, exc) from exc
    state = CipState(0, c0, u, c_history=[c0])
    fixed_rate = time_derivative(F - extract_normal_flux(u)) if problem.update_rule == "fixed_residual" else None

    for n in range(problem.n_star):
        try:
            if fixed_rate is None:
                residual = F - extract_normal_flux(state.u_n)
                rate = time_derivative(residual)
                state.residual_norms.append(float(np.sqrt(spec.dx * spec.dt * np.sum(residual.values**2))))
            else:
                rate = fixed_rate
            op_c = state.c_n if problem.update_rule == "increment" else c0
            sol = solve_qr(QrProblem(spec, op_c, state.u_n, rate, problem.epsilon,
                                     weighted_gram=problem.weighted_gram))
            base = state.c_n if problem.update_rule == "increment" else c0
            c_next = SpatialField(spec, np.asarray(base) + np.asarray(sol.p))
            u_next = _forward(problem, c_next)
        except Exception as exc:
            raise CipIterationError(n + 1, exc) from exc

        e = relative_difference(c_next, state.c_n)
        du = float(np.max(np.abs(np.asarray(u_next) - np.asarray(state.u_n))))
        state.e_history.append(e)
        state.forward_changes.append(du)
        state.reports.append(sol.report)
        state.c_history.append(c_next)
        if not problem.keep_history:
            state.c_history = state.c_history[-2:]
        state.n, state.c_n, state.u_n = n + 1, c_next, u_next
        log.info("cip iteration %d: e_n=%.4e max|u_{n+1}-u_n|=%.4e", n + 1, e, du)
    return state


def generate_cip_data(c_true, spec: GridSpec, g=default_initial, g1=default_boundary,
                      refinement: int = 2, scheme: str = "crank-nicolson") -> BoundaryFluxSeries:
    """Boundary flux ``F`` of the forward problem with coefficient ``c_true``.

    ``c_true`` and ``g`` are callables ``(x, y)`` (or fields on the refined
    grid), ``g1`` a callable ``(x, y, t)``.
    """
    return simulate_flux(spec, c_true, initial=g, dirichlet=g1, refinement=refinement, scheme=scheme)
