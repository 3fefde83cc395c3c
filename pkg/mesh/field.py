# dynkin/mesh/field.py
from __future__ import annotations
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from mesh.grids import GridSet
from mesh.interpolation import interp_t, interp_x, time_bracket
from schemes.envelope import EnvelopeResult, envelope_from_vertices, support_at
from utils.io import write_csv_atomic


@dataclass
class SolutionField:
    """Nodal values u[n, l, m] on (t_n, x_l, p_m).

    `vertex_mask[n, l]` marks the envelope vertices of each convexified
    p-row, so supports can be rebuilt without re-running the envelope.
    """
    values: np.ndarray
    grids: GridSet
    vertex_mask: Optional[np.ndarray] = None
    convexified: bool = False
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != self.grids.shape:
            raise ValueError(f"values shape {self.values.shape} does not match grids {self.grids.shape}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    def envelope(self, n: int, l: int) -> EnvelopeResult:
        verts = (self.vertex_mask[n, l] if self.vertex_mask is not None
                 else np.ones(self.grids.simplex.size, dtype=bool))
        return envelope_from_vertices(self.grids.simplex, self.values[n, l], verts)

    def _p_row(self, n: int, p: np.ndarray) -> np.ndarray:
        """u(t_n, x_l, p) for every l."""
        simplex = self.grids.simplex
        row = self.values[n]
        if simplex.scenario_count >= 3 and self.convexified:
            return np.array([support_at(self.envelope(n, l), p).value(row[l]) for l in range(row.shape[0])])
        # for I = 2 a convex row interpolated on all nodes coincides with its envelope
        idx, w = simplex.barycentric(p)
        return row[:, idx] @ w

    def value_at(self, t: float, x: float, p) -> float:
        """Interpolate in p (envelope support), then in x, then in t."""
        p = self.grids.simplex.as_point(p)
        n, w = time_bracket(t, self.grids.time)
        levels = [n] if w == 0.0 else [n, n + 1]
        rows = {k: float(interp_x(self._p_row(k, p), x, self.grids.space)) for k in levels}
        if w == 0.0:
            return rows[n]
        return rows[n] + (rows[n + 1] - rows[n]) * w

    def at_time(self, t: float, l: int, m: int) -> float:
        return float(interp_t(self.values[:, l, m], t, self.grids.time))

    def slice_at(self, n: int, p) -> np.ndarray:
        """u(t_n, ·, p) on the x grid."""
        return self._p_row(n, self.grids.simplex.as_point(p))

    def to_frame(self) -> pd.DataFrame:
        g = self.grids
        N1, L1, M = self.shape
        t = np.repeat(g.time.nodes, L1 * M)
        x = np.tile(np.repeat(g.space.nodes, M), N1)
        nodes = g.simplex.nodes
        if g.simplex.scenario_count <= 2:
            p = np.tile(nodes[:, 0], N1 * L1)
        else:
            labels = np.array([";".join(f"{c:.17g}" for c in row) for row in nodes])
            p = np.tile(labels, N1 * L1)
        return pd.DataFrame({"t": t, "x": x, "p": p, "u": self.values.ravel()})

    def to_csv(self, path: Path) -> None:
        write_csv_atomic(Path(path), self.to_frame())
