"""Tensor-product Gauss-Legendre grids on canonical 2-d supports.

Solvers work in standardised coordinates, so only three axis shapes ever
reach the grid builder: the unit interval, the half line [0, inf) and the
full line. Unbounded axes are folded onto (0, 1) before the Gauss-Legendre
rule is applied: t -> t/(1-t) for a half line, t -> tan(pi*(t-1/2)) for the
full line, with the map Jacobian absorbed into the weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

AXIS_BOX = "box"  # [0, 1]
AXIS_POS = "pos"  # [0, inf)
AXIS_REAL = "real"  # (-inf, inf)

# Grids above this order are rebuilt on demand instead of cached.
_CACHE_ORDER_LIMIT = 384


@lru_cache(maxsize=None)
def _gauss_legendre_unit(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    t = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def _axis_nodes(kind: str, order: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = _gauss_legendre_unit(order)
    if kind == AXIS_BOX:
        return t, w
    if kind == AXIS_POS:
        x = t / (1.0 - t)
        return x, w / (1.0 - t) ** 2
    if kind == AXIS_REAL:
        x = np.tan(np.pi * (t - 0.5))
        return x, w * np.pi * (1.0 + x * x)
    raise ValueError(f"unknown axis kind {kind!r}")


@dataclass(frozen=True)
class Grid2D:
    """Flattened tensor grid: coordinates u, v and positive weights w."""

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    order: int

    @property
    def size(self) -> int:
        return self.u.size


def _build_grid(kind_x: str, kind_y: str, order: int) -> Grid2D:
    xu, wu = _axis_nodes(kind_x, order)
    xv, wv = _axis_nodes(kind_y, order)
    u = np.repeat(xu, order)
    v = np.tile(xv, order)
    w = np.outer(wu, wv).ravel()
    for arr in (u, v, w):
        arr.setflags(write=False)
    return Grid2D(u=u, v=v, w=w, order=order)


@lru_cache(maxsize=16)
def _cached_grid(kind_x: str, kind_y: str, order: int) -> Grid2D:
    return _build_grid(kind_x, kind_y, order)


def canonical_grid(kind_x: str, kind_y: str, order: int) -> Grid2D:
    """Tensor grid for a canonical support; small orders come from a cache."""
    if order <= _CACHE_ORDER_LIMIT:
        return _cached_grid(kind_x, kind_y, order)
    return _build_grid(kind_x, kind_y, order)


def integrate(grid: Grid2D, values: np.ndarray) -> float:
    """Weighted sum of pointwise values over the grid (fixed summation order)."""
    return float(grid.w @ values)
