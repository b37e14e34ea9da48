"""Multiplicative uniform noise on boundary data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .fields import BoundaryFluxSeries

__all__ = ["NoiseSpec", "apply_noise"]


@dataclass(frozen=True)
class NoiseSpec:
    """Noise level ``delta`` and seed.

    Random numbers come from numpy's PCG64 bit generator, which is
    platform-independent for a given seed.
    """

    delta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.delta >= 0:
            raise ConfigurationError(f"noise level must be nonnegative, got {self.delta}")


def apply_noise(data: BoundaryFluxSeries, spec: NoiseSpec) -> BoundaryFluxSeries:
    """Multiply every entry by ``1 + delta * (2 r - 1)``, ``r ~ U[0, 1)`` i.i.d."""
    if spec.delta == 0:
        return BoundaryFluxSeries(data.spec, data.values, data.kind)
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    r = rng.random(data.values.shape)
    return BoundaryFluxSeries(data.spec, data.values * (1.0 + spec.delta * (-1.0 + 2.0 * r)), data.kind)
