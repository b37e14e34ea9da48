"""Grid functions: spatial fields, space-time fields and boundary time series.

All containers hold dense float64 arrays indexed 0-based by ``[i-1, j-1]``
(and ``[..., l-1]`` for time).  Boundary series store one row per node of
:func:`parabolic_qr.grid.boundary_nodes` and one column per time level.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DataError, DomainError
from .grid import GridSpec, boundary_index_arrays, boundary_nodes, boundary_sides

__all__ = [
    "SpatialField",
    "SpaceTimeField",
    "BoundaryFluxSeries",
    "FLUX",
    "FLUX_RATE",
    "to_lineup",
    "from_lineup",
    "time_derivative",
    "sample",
    "write_spatial_csv",
    "read_spatial_csv",
    "write_spacetime_csv",
    "write_boundary_csv",
    "read_boundary_csv",
]

FLUX = "flux"
FLUX_RATE = "flux_rate"


def _validated(values, shape, what) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != tuple(shape):
        raise DomainError(f"{what} has shape {arr.shape}, expected {tuple(shape)}")
    if not np.all(np.isfinite(arr)):
        bad = tuple(int(k) for k in np.argwhere(~np.isfinite(arr))[0])
        raise DataError(f"{what} has a non-finite entry at storage index {bad}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SpatialField:
    """Values on the ``(nx + 1) x (nx + 1)`` spatial grid."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _validated(self.values, self.spec.spatial_shape, "spatial field"))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Values on every space-time node, shape ``(nx + 1, nx + 1, nt + 1)``."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _validated(self.values, self.spec.shape, "space-time field"))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def at_level(self, l: int) -> SpatialField:
        """Spatial slice at 1-based time level ``l``."""
        if not 1 <= l <= self.spec.nt + 1:
            raise DomainError(f"time level {l} outside 1..{self.spec.nt + 1}")
        return SpatialField(self.spec, self.values[:, :, l - 1])

    def to_lineup(self) -> np.ndarray:
        return to_lineup(self)

    @classmethod
    def from_lineup(cls, spec: GridSpec, vec) -> "SpaceTimeField":
        return from_lineup(spec, vec)


@dataclass(frozen=True, eq=False)
class BoundaryFluxSeries:
    """Boundary data over time: the flux ``G`` or its time derivative ``G_t``.

    ``values[k, l-1]`` belongs to the k-th node of ``boundary_nodes(spec)``.
    """

    spec: GridSpec
    values: np.ndarray
    kind: str = FLUX

    def __post_init__(self):
        if self.kind not in (FLUX, FLUX_RATE):
            raise ConfigurationError(f"unknown boundary series kind {self.kind!r}")
        shape = (4 * self.spec.nx, self.spec.nt + 1)
        object.__setattr__(self, "values", _validated(self.values, shape, "boundary series"))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __sub__(self, other: "BoundaryFluxSeries") -> "BoundaryFluxSeries":
        if other.spec != self.spec or other.kind != self.kind:
            raise DomainError("boundary series differ in grid or kind")
        return BoundaryFluxSeries(self.spec, self.values - other.values, self.kind)

    def __add__(self, other: "BoundaryFluxSeries") -> "BoundaryFluxSeries":
        if other.spec != self.spec or other.kind != self.kind:
            raise DomainError("boundary series differ in grid or kind")
        return BoundaryFluxSeries(self.spec, self.values + other.values, self.kind)

    def to_lineup(self) -> np.ndarray:
        """Lineup vector with the data at boundary ordinals and zero elsewhere."""
        full = np.zeros(self.spec.shape)
        ii, jj = boundary_index_arrays(self.spec)
        full[ii, jj, :] = self.values
        return full.ravel()

    def l2_norm_in_space(self) -> np.ndarray:
        """``||G(., t_l)||_{L^2(boundary)}`` per time level (rectangle rule)."""
        return np.sqrt(self.spec.dx * np.sum(self.values**2, axis=0))


def to_lineup(field: SpaceTimeField) -> np.ndarray:
    """Flatten a space-time field into its lineup vector (0-based storage)."""
    return np.asarray(field.values).ravel().copy()


def from_lineup(spec: GridSpec, vec) -> SpaceTimeField:
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (spec.size,):
        raise DomainError(f"lineup vector has shape {vec.shape}, expected ({spec.size},)")
    return SpaceTimeField(spec, vec.reshape(spec.shape))


def time_derivative(series: BoundaryFluxSeries) -> BoundaryFluxSeries:
    """Second-order finite-difference time derivative of a flux series.

    Central differences at interior levels, one-sided three-point formulas at
    the first and last levels.
    """
    if series.kind != FLUX:
        raise ConfigurationError("time_derivative expects a flux series")
    if series.spec.nt < 2:
        raise ConfigurationError("time_derivative needs nt >= 2")
    rate = np.gradient(series.values, series.spec.dt, axis=1, edge_order=2)
    return BoundaryFluxSeries(series.spec, rate, FLUX_RATE)


def time_derivative_array(values: np.ndarray, dt: float) -> np.ndarray:
    """Same stencils as :func:`time_derivative`, along the last axis of an array."""
    return np.gradient(np.asarray(values, dtype=float), dt, axis=-1, edge_order=2)


def sample(fn, spec: GridSpec, space_time: bool = False):
    """Evaluate ``fn(x, y)`` or ``fn(x, y, t)`` at every grid node.

    ``fn`` is called once with broadcastable numpy arrays.
    """
    X, Y = spec.mesh()
    if space_time:
        vals = fn(X[..., None], Y[..., None], spec.t[None, None, :])
        vals = np.broadcast_to(np.asarray(vals, dtype=float), spec.shape)
    else:
        vals = np.broadcast_to(np.asarray(fn(X, Y), dtype=float), spec.spatial_shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        k = tuple(int(v) for v in np.argwhere(bad)[0])
        where = f"x={X[k[:2]]:.6g}, y={Y[k[:2]]:.6g}"
        if space_time:
            where += f", t={spec.t[k[2]]:.6g}"
        raise DataError(f"non-finite sample at node {tuple(v + 1 for v in k)} ({where})")
    if space_time:
        return SpaceTimeField(spec, vals)
    return SpatialField(spec, vals)


# --- CSV ----------------------------------------------------------------------

_FMT = "%.17g"


def write_spatial_csv(path, field: SpatialField) -> Path:
    """Write ``x,y,value`` rows in row-major ``(i, j)`` order."""
    path = Path(path)
    X, Y = field.spec.mesh()
    table = np.column_stack([X.ravel(), Y.ravel(), np.asarray(field.values).ravel()])
    np.savetxt(path, table, delimiter=",", header="x,y,value", comments="", fmt=_FMT)
    return path


def read_spatial_csv(path, spec: GridSpec) -> SpatialField:
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if table.shape != ((spec.nx + 1) ** 2, 3):
        raise DomainError(f"{path}: table shape {table.shape} does not match grid")
    return SpatialField(spec, table[:, 2].reshape(spec.spatial_shape))


def write_spacetime_csv(directory, stem: str, field: SpaceTimeField, levels=None) -> list[Path]:
    """One spatial CSV per selected 1-based time level, named ``{stem}_l{l}.csv``."""
    directory = Path(directory)
    levels = range(1, field.spec.nt + 2) if levels is None else levels
    return [write_spatial_csv(directory / f"{stem}_l{l}.csv", field.at_level(l)) for l in levels]


def write_boundary_csv(path, series: BoundaryFluxSeries) -> Path:
    """Write ``side,i,j,t,value`` rows, node-major then time."""
    path = Path(path)
    spec = series.spec
    t = spec.t
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["side", "i", "j", "t", "value"])
        for k, ((i, j), side) in enumerate(zip(boundary_nodes(spec), boundary_sides(spec))):
            for l in range(spec.nt + 1):
                writer.writerow([side, i, j, _FMT % t[l], _FMT % series.values[k, l]])
    return path


def read_boundary_csv(path, spec: GridSpec, kind: str = FLUX) -> BoundaryFluxSeries:
    nodes = {node: k for k, node in enumerate(boundary_nodes(spec))}
    values = np.full((4 * spec.nx, spec.nt + 1), np.nan)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            k = nodes.get((int(row["i"]), int(row["j"])))
            if k is None:
                raise DomainError(f"{path}: ({row['i']}, {row['j']}) is not a boundary node")
            l = int(round(float(row["t"]) / spec.dt))
            values[k, l] = float(row["value"])
    return BoundaryFluxSeries(spec, values, kind)
