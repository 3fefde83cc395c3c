# dynkin/analysis/regularity.py
from __future__ import annotations
from dataclasses import asdict, dataclass

import numpy as np

from mesh.field import SolutionField
from problem.spec import ProblemSpec


@dataclass(frozen=True)
class LipschitzReport:
    lip_x: float
    lip_p: float
    hol_t: float

    def as_dict(self) -> dict:
        return asdict(self)


def _lip_x(values: np.ndarray, dx: float) -> float:
    if values.shape[1] < 2:
        return 0.0
    return float(np.max(np.abs(np.diff(values, axis=1))) / dx)


def _lip_p(field: SolutionField) -> float:
    simplex = field.grids.simplex
    edges = simplex.edges()
    if edges.size == 0:
        return 0.0
    a, b = edges[:, 0], edges[:, 1]
    dist = np.max(np.abs(simplex.nodes[a] - simplex.nodes[b]), axis=1)
    du = np.abs(field.values[:, :, a] - field.values[:, :, b])
    return float(np.max(du / dist))


def _hol_t(values: np.ndarray, dt: float) -> float:
    """max |u(t_k) − u(t_n)| / (√Δt + √|t_k − t_n|) over lags 1, 2, 4, ..."""
    N = values.shape[0] - 1
    best, lag = 0.0, 1
    while lag <= N:
        du = np.abs(values[lag:] - values[:-lag])
        best = max(best, float(np.max(du)) / (np.sqrt(dt) + np.sqrt(lag * dt)))
        lag *= 2
    return best


def regularity_constants(field: SolutionField) -> LipschitzReport:
    g = field.grids
    return LipschitzReport(
        lip_x=_lip_x(field.values, g.space.dx),
        lip_p=_lip_p(field),
        hol_t=_hol_t(field.values, g.time.dt),
    )


def lip_p_bound(problem: ProblemSpec, field: SolutionField) -> float:
    """max{‖f‖∞, Lip(g), ‖h‖∞} sampled on the field's (t, x) grid."""
    g = field.grids
    x = g.space.nodes
    parts = []
    gx = np.asarray(problem.terminal(x), dtype=float).reshape(len(x), -1)
    parts.append(float(np.max(np.abs(np.diff(gx, axis=0))) / g.space.dx) if len(x) > 1 else 0.0)
    for fn in (problem.lower_obstacle, problem.upper_obstacle):
        if fn is None:
            continue
        parts.append(max(float(np.max(np.abs(fn(t, x)))) for t in g.time.nodes))
    return max(parts)
