# dynkin/mesh/interpolation.py
from __future__ import annotations

import numpy as np

from mesh.grids import SpaceGrid, TimeGrid


def interp_x(values: np.ndarray, x, grid: SpaceGrid) -> np.ndarray:
    """Piecewise-linear interpolant of nodal values at x.

    `values` has shape (L+1,) or (L+1, K); the result has shape
    x.shape + values.shape[1:]. Queries outside the grid are clamped to the
    nearest endpoint (constant extrapolation).
    """
    values = np.asarray(values, dtype=float)
    x = np.asarray(x, dtype=float)
    if values.shape[0] != grid.cells + 1:
        raise ValueError(f"values has {values.shape[0]} rows, grid has {grid.cells + 1} nodes")
    if not np.all(np.isfinite(x)):
        raise ValueError("interp_x: non-finite query point")
    s = (np.clip(x, grid.lo, grid.hi) - grid.lo) / grid.dx
    j = np.clip(np.floor(s).astype(int), 0, grid.cells - 1)
    w = s - j
    w = w.reshape(w.shape + (1,) * (values.ndim - 1))
    return (1.0 - w) * values[j] + w * values[j + 1]


def count_outside(x, grid: SpaceGrid) -> int:
    x = np.asarray(x, dtype=float)
    return int(np.count_nonzero((x < grid.lo) | (x > grid.hi)))


def time_bracket(t: float, grid: TimeGrid) -> tuple[int, float]:
    """(n, w) with t = (1 − w)·t_n + w·t_{n+1}."""
    if not (np.isfinite(t) and -1e-12 <= t <= grid.horizon + 1e-12):
        raise ValueError(f"t = {t} outside [0, {grid.horizon}]")
    s = min(max(t, 0.0), grid.horizon) / grid.dt
    if abs(s - round(s)) <= 1e-9:
        s = float(round(s))
    n = min(int(np.floor(s)), grid.steps - 1)
    return n, s - n


def interp_t(values: np.ndarray, t: float, grid: TimeGrid) -> np.ndarray:
    """Linear blend in time; `values` is indexed by level along axis 0."""
    n, w = time_bracket(t, grid)
    lo, hi = values[n], values[n + 1]
    if w == 0.0:
        return np.asarray(lo, dtype=float)
    if w == 1.0:
        return np.asarray(hi, dtype=float)
    return lo + (hi - lo) * w


def interp_p(level_values: np.ndarray, support_nodes, support_weights) -> float:
    """Σ value(π_i)·λ_i over a support (node indices and barycentric weights)."""
    nodes = np.asarray(support_nodes, dtype=int)
    weights = np.asarray(support_weights, dtype=float)
    if np.any(weights < -1e-12) or abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError("interp_p: support weights are not barycentric")
    return float(np.dot(np.asarray(level_values, dtype=float)[nodes], weights))
