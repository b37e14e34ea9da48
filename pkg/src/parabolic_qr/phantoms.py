"""True sources, true coefficients and the fixed data functions of the tests.

Every ``eval_*`` function is vectorised over numpy arrays of coordinates.
Letter shapes are stroke polylines read from ``data/letters.json``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Callable

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError, DomainError
from .fields import SpatialField

__all__ = [
    "Region",
    "Phantom",
    "PHANTOM_NAMES",
    "bump",
    "eval_test1",
    "eval_test2",
    "eval_test3",
    "eval_test4",
    "eval_test5",
    "eval_test6",
    "eval_f",
    "eval_c_background",
    "letter_mask",
    "letter_polylines",
    "get_phantom",
    "custom_phantom",
    "metric_extreme_errors",
]

PHANTOM_NAMES = ("test1", "test2", "test3", "test4", "test5", "test6", "custom")


def bump(x, y, cx, cy, radius):
    """``exp(r^2 / (r^2 - radius^2))`` inside the disk, 0 outside; peak 1."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    r2 = (x - cx) ** 2 + (y - cy) ** 2
    inside = r2 < radius**2
    denom = np.where(inside, r2 - radius**2, -1.0)
    return np.where(inside, np.exp(r2 / denom), 0.0)


def eval_test1(x, y):
    return bump(x, y, 0.3, 0.0, 0.5)


def eval_test2(x, y, scaled: bool = True):
    """Positive bump at (0.4, 0.4) and negative bump at (-0.4, -0.4).

    With ``scaled`` the negative bump has amplitude 2, which reproduces the
    tabulated true extreme ``-2``; otherwise its peak is ``-1``.
    """
    amp = 2.0 if scaled else 1.0
    return bump(x, y, 0.4, 0.4, 0.5) - amp * bump(x, y, -0.4, -0.4, 0.5)


def _disk3(x, y):
    return (x - 0.45) ** 2 + y**2 < 0.25**2


def _ellipse3(x, y):
    return 5.0 * (x + 0.45) ** 2 + y**2 / 3.0 < 0.25**2


def eval_test3(x, y):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return np.where(_disk3(x, y), -2.0, np.where(_ellipse3(x, y), 2.0, 0.0))


@lru_cache(maxsize=None)
def _letters() -> dict:
    text = resources.files("parabolic_qr").joinpath("data/letters.json").read_text()
    return json.loads(text)


def letter_polylines(name: str) -> list[np.ndarray]:
    data = _letters()["letters"]
    if name not in data:
        raise ConfigurationError(f"unknown letter {name!r}; available: {sorted(data)}")
    return [np.asarray(poly, dtype=float) for poly in data[name]]


def _segment_distance(x, y, a, b):
    d = b - a
    t = np.clip(((x - a[0]) * d[0] + (y - a[1]) * d[1]) / (d @ d), 0.0, 1.0)
    return np.hypot(x - a[0] - t * d[0], y - a[1] - t * d[1])


def letter_mask(x, y, name: str, half_width: float | None = None):
    """True within ``half_width`` of the letter's stroke centerline."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    hw = _letters()["half_width"] if half_width is None else half_width
    dist = np.full(np.broadcast(x, y).shape, np.inf)
    for poly in letter_polylines(name):
        for a, b in zip(poly[:-1], poly[1:]):
            dist = np.minimum(dist, _segment_distance(x, y, a, b))
    return dist <= hw


def eval_test4(x, y):
    return np.where(letter_mask(x, y, "omega"), 1.0, 0.0)


def eval_test5(x, y):
    return np.where(letter_mask(x, y, "sigma"), 3.0, 1.0)


def _rects6(x, y):
    a = np.maximum(np.abs(x + 0.3), 3.0 * np.abs(y)) < 0.4
    b = np.maximum(6.0 * np.abs(x - 0.5), np.abs(y)) < 0.8
    return a, b


def eval_test6(x, y):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    a, b = _rects6(x, y)
    return np.where(a | b, 5.0, 1.0)


def eval_f(x, y, t):
    return 1.0 + 0.2 * np.exp(t * (x**2 + y**2))


def eval_c_background(x, y):
    return 0.2 * (x**2 + y**2)


@dataclass
class Region:
    """Support of one inclusion: ``indicator(x, y) -> bool array``."""

    name: str
    extreme_true: float
    indicator: Callable
    sign: int = 1


@dataclass
class Phantom:
    name: str
    kind: str  # "source" or "coefficient"
    fn: Callable
    regions: list[Region] = field(default_factory=list)
    background: float = 0.0


def _disk(cx, cy, r):
    return lambda x, y: (x - cx) ** 2 + (y - cy) ** 2 < r**2


def get_phantom(name: str, test2_scaled: bool = True, parameters: dict | None = None) -> Phantom:
    """Phantom by name; ``custom`` takes ``parameters`` (see :func:`custom_phantom`)."""
    if name == "test1":
        return Phantom(name, "source", eval_test1, [Region("1", 1.0, _disk(0.3, 0.0, 0.5))])
    if name == "test2":
        amp = 2.0 if test2_scaled else 1.0
        return Phantom(name, "source", lambda x, y: eval_test2(x, y, test2_scaled), [
            Region("1", 1.0, _disk(0.4, 0.4, 0.5)),
            Region("2", -amp, _disk(-0.4, -0.4, 0.5), sign=-1),
        ])
    if name == "test3":
        return Phantom(name, "source", eval_test3, [
            Region("1", 2.0, _ellipse3),
            Region("2", -2.0, _disk3, sign=-1),
        ])
    if name == "test4":
        return Phantom(name, "source", eval_test4,
                       [Region("1", 1.0, lambda x, y: letter_mask(x, y, "omega"))])
    if name == "test5":
        return Phantom(name, "coefficient", eval_test5,
                       [Region("1", 3.0, lambda x, y: letter_mask(x, y, "sigma"))], background=1.0)
    if name == "test6":
        return Phantom(name, "coefficient", eval_test6,
                       [Region("1", 5.0, lambda x, y: np.logical_or(*_rects6(x, y)))], background=1.0)
    if name == "custom":
        if parameters is None:
            raise ConfigurationError("custom phantom needs parameters")
        return custom_phantom(parameters)
    raise ConfigurationError(f"unknown phantom {name!r}; choose from {PHANTOM_NAMES}")


def custom_phantom(parameters: dict) -> Phantom:
    """Background plus a list of inclusions.

    ``parameters = {"kind": "source"|"coefficient", "background": b,
    "inclusions": [{"shape": "disk"|"bump"|"rect", "center": [x, y],
    "radius": r | "half_widths": [a, b], "value": v}, ...]}``.
    Inclusion values add to the background.
    """
    kind = parameters.get("kind", "source")
    if kind not in ("source", "coefficient"):
        raise ConfigurationError(f"custom phantom kind must be source or coefficient, got {kind!r}")
    background = float(parameters.get("background", 0.0))
    parts = []
    regions = []
    for k, inc in enumerate(parameters.get("inclusions", []), start=1):
        shape = inc.get("shape", "disk")
        cx, cy = map(float, inc["center"])
        value = float(inc["value"])
        if shape in ("disk", "bump"):
            r = float(inc["radius"])
            ind = _disk(cx, cy, r)
            if shape == "disk":
                parts.append(lambda x, y, ind=ind, v=value: v * ind(x, y))
            else:
                parts.append(lambda x, y, cx=cx, cy=cy, r=r, v=value: v * bump(x, y, cx, cy, r))
        elif shape == "rect":
            a, b = map(float, inc["half_widths"])
            ind = (lambda x, y, cx=cx, cy=cy, a=a, b=b:
                   (np.abs(x - cx) < a) & (np.abs(y - cy) < b))
            parts.append(lambda x, y, ind=ind, v=value: v * ind(x, y))
        else:
            raise ConfigurationError(f"unknown inclusion shape {shape!r}")
        regions.append(Region(str(k), background + value, ind, sign=1 if value >= 0 else -1))

    def fn(x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        out = np.full(np.broadcast(x, y).shape, background)
        for part in parts:
            out = out + part(x, y)
        return out

    return Phantom("custom", kind, fn, regions, background)


def metric_extreme_errors(p_comp: SpatialField, regions: list[Region]) -> list[dict]:
    """Per-inclusion extreme of ``p_comp`` and its relative error.

    Each region is the inclusion's support on the grid dilated by one cell.
    The extreme is the max for positive inclusions and the min for negative
    ones.
    """
    X, Y = p_comp.spec.mesh()
    vals = np.asarray(p_comp)
    rows = []
    for reg in regions:
        mask = np.asarray(reg.indicator(X, Y), dtype=bool)
        mask = ndimage.binary_dilation(mask, structure=np.ones((3, 3), dtype=bool))
        if not mask.any():
            raise DomainError(f"inclusion {reg.name} covers no grid node")
        ext = float(vals[mask].max() if reg.sign > 0 else vals[mask].min())
        rows.append({
            "inclusion": reg.name,
            "extreme_true": reg.extreme_true,
            "extreme_comp": ext,
            "err_rel": abs(ext - reg.extreme_true) / abs(reg.extreme_true),
        })
    return rows
