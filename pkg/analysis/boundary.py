# dynkin/analysis/boundary.py
from __future__ import annotations
from dataclasses import dataclass
from typing import Union

import numpy as np
import pandas as pd

from mesh.field import SolutionField
from problem.spec import ProblemSpec

LOWER, UPPER, WAITING = "lower", "upper", "waiting"


@dataclass(frozen=True, eq=False)
class ActiveSetMask:
    """Obstacle-contact masks over (t_n, x_l) at one belief point."""
    lower: np.ndarray
    upper: np.ndarray
    tol: float
    p: np.ndarray
    t: np.ndarray
    x: np.ndarray

    @property
    def waiting(self) -> np.ndarray:
        return ~(self.lower | self.upper)

    def states(self) -> np.ndarray:
        out = np.full(self.lower.shape, WAITING, dtype=object)
        out[self.upper] = UPPER
        # lower wins where both obstacles coincide
        out[self.lower] = LOWER
        return out

    def to_frame(self) -> pd.DataFrame:
        N1, L1 = self.lower.shape
        return pd.DataFrame({
            "t": np.repeat(self.t, L1),
            "x": np.tile(self.x, N1),
            "state": self.states().ravel(),
        })

    def counts(self) -> dict:
        return {LOWER: int(self.lower.sum()), UPPER: int(self.upper.sum()), WAITING: int(self.waiting.sum())}


def active_sets(field: SolutionField, problem: ProblemSpec, p: Union[int, float, np.ndarray],
                tol: float = 2e-5) -> ActiveSetMask:
    """lower[n, l] ⇔ |u − p·f| < tol, upper[n, l] ⇔ |u − p·h| < tol.

    `p` is a p-node index (int) or a point of the simplex.
    """
    if not problem.has_obstacles:
        raise ValueError("active_sets needs a problem with obstacles")
    if tol < 0:
        raise ValueError(f"tol must be >= 0, got {tol}")
    g = field.grids
    if isinstance(p, (int, np.integer)):
        if not 0 <= p < g.simplex.size:
            raise ValueError(f"p-node index {p} out of range")
        point = g.simplex.nodes[int(p)]
        rows = field.values[:, :, int(p)]
    else:
        point = g.simplex.as_point(p)
        rows = np.stack([field.slice_at(n, point) for n in range(g.time.steps + 1)])
    x = g.space.nodes
    lower = np.zeros(rows.shape, dtype=bool)
    upper = np.zeros(rows.shape, dtype=bool)
    for n, t in enumerate(g.time.nodes):
        f, h = problem.obstacle_bounds(t, x, point[None, :])
        lower[n] = np.abs(rows[n] - f[:, 0]) < tol
        upper[n] = np.abs(rows[n] - h[:, 0]) < tol
    return ActiveSetMask(lower, upper, tol, point, g.time.nodes.copy(), x.copy())


def waiting_connected(mask: ActiveSetMask) -> np.ndarray:
    """Per time level: waiting nodes, merged with the upper-active ones, form one run in x.

    An upper-active band inside the continuation region does not split it; a
    level fails only when a waiting pocket sits across a lower-active stretch.
    """
    out = np.empty(mask.lower.shape[0], dtype=bool)
    for n, (row, free) in enumerate(zip(mask.waiting, ~mask.lower)):
        idx = np.flatnonzero(free)
        out[n] = not row.any() or (idx[-1] - idx[0] + 1 == idx.size)
    return out
