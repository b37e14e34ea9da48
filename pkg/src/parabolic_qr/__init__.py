"""Quasi-reversibility reconstruction of sources and coefficients in 2D parabolic equations."""

__version__ = "0.1.0"

from .cip import CipProblem, CipState, cip_iterate, generate_cip_data, relative_difference
from .errors import ConfigurationError, ConvergenceError, DataError, DomainError, PreconditionError, SolverError
from .fields import FLUX, FLUX_RATE, BoundaryFluxSeries, SpaceTimeField, SpatialField, sample, time_derivative
from .forward import ForwardProblem, extract_normal_flux, generate_data, simulate_flux, solve_forward
from .grid import GridSpec, delineup, lineup
from .noise import NoiseSpec, apply_noise
from .phantoms import get_phantom, metric_extreme_errors
from .qr_solver import QrProblem, QrSolution, assemble_system, solve_qr

__all__ = [
    "__version__",
    "GridSpec", "lineup", "delineup",
    "SpatialField", "SpaceTimeField", "BoundaryFluxSeries", "FLUX", "FLUX_RATE", "sample", "time_derivative",
    "ForwardProblem", "solve_forward", "extract_normal_flux", "simulate_flux", "generate_data",
    "NoiseSpec", "apply_noise",
    "QrProblem", "QrSolution", "assemble_system", "solve_qr",
    "CipProblem", "CipState", "cip_iterate", "generate_cip_data", "relative_difference",
    "get_phantom", "metric_extreme_errors",
    "DomainError", "ConfigurationError", "DataError", "PreconditionError", "ConvergenceError", "SolverError",
]
