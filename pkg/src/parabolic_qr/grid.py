"""Space-time grid on the square (-R, R)^2 x [0, T] and the lineup ordering.

Indices in the public API are 1-based so that every stencil reads the same
as its mathematical definition.  Storage arrays are 0-based with shape
``(nx + 1, nx + 1, nt + 1)`` in C order, which makes the lineup ordinal of
node ``(i, j, l)`` equal to one plus its flat storage offset.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, DomainError

__all__ = [
    "GridSpec",
    "NodeIndex",
    "lineup",
    "delineup",
    "boundary_nodes",
    "boundary_sides",
    "interior_mask",
    "boundary_index_arrays",
    "inward_neighbors",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform square grid with ``nx`` cells per axis and ``nt`` time steps.

    Parameters
    ----------
    R : float
        Half-width of the square domain.
    nx : int
        Number of spatial subdivisions per axis (``N_x``).
    nt : int
        Number of time subdivisions (``N_t``).
    T : float
        Final time.
    """

    R: float = 1.0
    nx: int = 100
    nt: int = 60
    T: float = 0.2

    def __post_init__(self):
        if int(self.nx) != self.nx or self.nx < 2:
            raise ConfigurationError(f"nx must be an integer >= 2, got {self.nx}")
        if int(self.nt) != self.nt or self.nt < 1:
            raise ConfigurationError(f"nt must be an integer >= 1, got {self.nt}")
        if not self.R > 0:
            raise ConfigurationError(f"R must be positive, got {self.R}")
        if not self.T > 0:
            raise ConfigurationError(f"T must be positive, got {self.T}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "nt", int(self.nt))
        object.__setattr__(self, "R", float(self.R))
        object.__setattr__(self, "T", float(self.T))

    @property
    def dx(self) -> float:
        return 2.0 * self.R / self.nx

    @property
    def dt(self) -> float:
        return self.T / self.nt

    @property
    def x(self) -> np.ndarray:
        """Node coordinates along one axis, ``x_i = -R + (i - 1) dx``."""
        return -self.R + np.arange(self.nx + 1) * self.dx

    @property
    def t(self) -> np.ndarray:
        """Time levels ``t_l = (l - 1) dt``."""
        return np.arange(self.nt + 1) * self.dt

    @property
    def spatial_shape(self) -> tuple[int, int]:
        return (self.nx + 1, self.nx + 1)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx + 1, self.nx + 1, self.nt + 1)

    @property
    def size(self) -> int:
        """Length of a lineup vector, ``(nx + 1)^2 (nt + 1)``."""
        return (self.nx + 1) ** 2 * (self.nt + 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Spatial coordinate arrays ``(X, Y)`` indexed ``[i - 1, j - 1]``."""
        return np.meshgrid(self.x, self.x, indexing="ij")

    def refined(self, factor: int) -> "GridSpec":
        """The same domain with every axis subdivided ``factor`` times finer."""
        if int(factor) != factor or factor < 1:
            raise ConfigurationError(f"refinement factor must be a positive integer, got {factor}")
        return GridSpec(self.R, self.nx * int(factor), self.nt * int(factor), self.T)


class NodeIndex(NamedTuple):
    """1-based space-time node index."""

    i: int
    j: int
    l: int


def _check_index(spec: GridSpec, idx) -> NodeIndex:
    i, j, l = idx
    if not (1 <= i <= spec.nx + 1 and 1 <= j <= spec.nx + 1 and 1 <= l <= spec.nt + 1):
        raise DomainError(f"node index {tuple(idx)} outside grid {spec.nx + 1}x{spec.nx + 1}x{spec.nt + 1}")
    return NodeIndex(int(i), int(j), int(l))


def lineup(spec: GridSpec, idx) -> int:
    """1-based lineup ordinal of node ``idx = (i, j, l)``."""
    i, j, l = _check_index(spec, idx)
    return (i - 1) * (spec.nx + 1) * (spec.nt + 1) + (j - 1) * (spec.nt + 1) + l


def delineup(spec: GridSpec, n: int) -> NodeIndex:
    """Inverse of :func:`lineup`."""
    if not 1 <= n <= spec.size:
        raise DomainError(f"ordinal {n} outside 1..{spec.size}")
    i, j, l = np.unravel_index(int(n) - 1, spec.shape)
    return NodeIndex(int(i) + 1, int(j) + 1, int(l) + 1)


def boundary_nodes(spec: GridSpec) -> list[tuple[int, int]]:
    """Spatial boundary nodes ``(i, j)`` in lineup order; corners appear once."""
    m = spec.nx + 1
    return [
        (i, j)
        for i in range(1, m + 1)
        for j in range(1, m + 1)
        if i in (1, m) or j in (1, m)
    ]


def boundary_sides(spec: GridSpec) -> list[str]:
    """Owning side of each node of :func:`boundary_nodes`.

    x-sides take precedence at corners: ``"x-"`` for ``i = 1``, ``"x+"`` for
    ``i = nx + 1``, then ``"y-"``/``"y+"`` for ``j = 1``/``j = nx + 1``.
    """
    m = spec.nx + 1
    sides = []
    for i, j in boundary_nodes(spec):
        if i == 1:
            sides.append("x-")
        elif i == m:
            sides.append("x+")
        elif j == 1:
            sides.append("y-")
        else:
            sides.append("y+")
    return sides


def interior_mask(spec: GridSpec) -> np.ndarray:
    """Boolean ``(nx + 1, nx + 1)`` array, True at interior nodes."""
    mask = np.zeros(spec.spatial_shape, dtype=bool)
    mask[1:-1, 1:-1] = True
    return mask


def boundary_index_arrays(spec: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """0-based ``(ii, jj)`` storage indices of the boundary nodes."""
    nodes = np.asarray(boundary_nodes(spec), dtype=np.intp) - 1
    return nodes[:, 0], nodes[:, 1]


def inward_neighbors(spec: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """0-based storage indices of the inward neighbour of each boundary node.

    The one-sided normal derivative at boundary node ``b`` is
    ``(u[b] - u[neighbor]) / dx``.
    """
    ii, jj = boundary_index_arrays(spec)
    ni, nj = ii.copy(), jj.copy()
    for k, side in enumerate(boundary_sides(spec)):
        if side == "x-":
            ni[k] += 1
        elif side == "x+":
            ni[k] -= 1
        elif side == "y-":
            nj[k] += 1
        else:
            nj[k] -= 1
    return ni, nj
