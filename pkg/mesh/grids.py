# dynkin/mesh/grids.py
from __future__ import annotations
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Optional

import numpy as np
from scipy.spatial import Delaunay

SIMPLEX_ATOL = 1e-12


@dataclass(frozen=True)
class TimeGrid:
    horizon: float
    steps: int

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be > 0, got {self.horizon}")

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def nodes(self) -> np.ndarray:
        t = np.arange(self.steps + 1) * self.dt
        t[-1] = self.horizon
        return t


@dataclass(frozen=True)
class SpaceGrid:
    lo: float
    hi: float
    cells: int

    def __post_init__(self):
        if self.cells < 1:
            raise ValueError(f"cells must be >= 1, got {self.cells}")
        if not self.lo < self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def dx(self) -> float:
        return (self.hi - self.lo) / self.cells

    @property
    def nodes(self) -> np.ndarray:
        x = self.lo + np.arange(self.cells + 1) * self.dx
        x[-1] = self.hi
        return x


def _lattice(I: int, K: int) -> np.ndarray:
    """All points of Δ(I) with coordinates in {0, 1/K, ..., 1}, sorted lexicographically."""
    pts = []
    for combo in combinations_with_replacement(range(I), K):
        counts = np.bincount(np.asarray(combo, dtype=int), minlength=I)
        pts.append(counts / K)
    pts = np.array(pts, dtype=float)
    order = np.lexsort(pts.T[::-1])
    return pts[order]


@dataclass(frozen=True, eq=False)
class SimplexGrid:
    """Nodes of Δ(I) as an (M, I) array.

    I = 1: the single point (1,). I = 2: nodes (m/K, 1 − m/K), m = 0..K, so the
    first coordinate increases with m. I ≥ 3: the uniform lattice with spacing
    1/K and a Delaunay triangulation of its first I − 1 coordinates.
    """
    scenario_count: int
    divisions: int
    nodes: np.ndarray = field(repr=False)
    triangulation: Optional[Delaunay] = field(default=None, repr=False)

    @classmethod
    def uniform(cls, scenario_count: int, divisions: int) -> "SimplexGrid":
        I, K = scenario_count, divisions
        if I < 1:
            raise ValueError(f"scenario_count must be >= 1, got {I}")
        if I == 1:
            return cls(1, 1, np.ones((1, 1)))
        if K < 1:
            raise ValueError(f"divisions must be >= 1, got {K}")
        if I == 2:
            p = np.arange(K + 1) / K
            return cls(2, K, np.stack([p, 1.0 - p], axis=1))
        pts = _lattice(I, K)
        return cls(I, K, pts, Delaunay(pts[:, : I - 1]))

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def dp(self) -> float:
        return 1.0 / self.divisions

    @property
    def first_coordinate(self) -> np.ndarray:
        return self.nodes[:, 0]

    def as_point(self, p) -> np.ndarray:
        """Accept a full coordinate vector, or for I = 2 the scalar first coordinate."""
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if self.scenario_count == 2 and p.shape == (1,):
            p = np.array([p[0], 1.0 - p[0]])
        if p.shape != (self.scenario_count,):
            raise ValueError(f"point must have {self.scenario_count} coordinates, got shape {p.shape}")
        if not (np.all(np.isfinite(p)) and np.all(p >= -SIMPLEX_ATOL) and abs(p.sum() - 1.0) <= 1e-9):
            raise ValueError(f"point {p.tolist()} is outside the simplex")
        return np.clip(p, 0.0, 1.0)

    def node_index(self, p) -> Optional[int]:
        """Index of the node equal to p (within 1e-12), else None."""
        p = self.as_point(p)
        d = np.abs(self.nodes - p).max(axis=1)
        k = int(np.argmin(d))
        return k if d[k] <= SIMPLEX_ATOL else None

    def edges(self) -> np.ndarray:
        """Pairs of neighbouring nodes, (E, 2)."""
        if self.scenario_count == 1:
            return np.zeros((0, 2), dtype=int)
        if self.scenario_count == 2:
            m = np.arange(self.size - 1)
            return np.stack([m, m + 1], axis=1)
        pairs = set()
        for s in self.triangulation.simplices:
            for a in range(len(s)):
                for b in range(a + 1, len(s)):
                    pairs.add((min(s[a], s[b]), max(s[a], s[b])))
        return np.array(sorted(pairs), dtype=int)

    def barycentric(self, p) -> tuple[np.ndarray, np.ndarray]:
        """Cell of the static partition containing p: (node indices, weights)."""
        p = self.as_point(p)
        if self.scenario_count == 1:
            return np.array([0]), np.array([1.0])
        if self.scenario_count == 2:
            x = p[0] * self.divisions
            j = min(int(np.floor(x)), self.divisions - 1)
            w = x - j
            if w <= SIMPLEX_ATOL:
                return np.array([j]), np.array([1.0])
            if w >= 1.0 - SIMPLEX_ATOL:
                return np.array([j + 1]), np.array([1.0])
            return np.array([j, j + 1]), np.array([1.0 - w, w])
        I = self.scenario_count
        tri = self.triangulation
        s = int(tri.find_simplex(p[: I - 1], tol=SIMPLEX_ATOL))
        if s < 0:
            raise ValueError(f"point {p.tolist()} not covered by the triangulation")
        T = tri.transform[s]
        b = T[: I - 1].dot(p[: I - 1] - T[I - 1])
        w = np.append(b, 1.0 - b.sum())
        idx = tri.simplices[s]
        keep = w > SIMPLEX_ATOL
        return idx[keep].astype(int), w[keep] / w[keep].sum()


@dataclass(frozen=True, eq=False)
class GridSet:
    time: TimeGrid
    space: SpaceGrid
    simplex: SimplexGrid

    @classmethod
    def uniform(cls, horizon: float, domain: tuple[float, float], steps: int, cells: int,
                scenario_count: int, divisions: int) -> "GridSet":
        return cls(
            TimeGrid(horizon, steps),
            SpaceGrid(float(domain[0]), float(domain[1]), cells),
            SimplexGrid.uniform(scenario_count, divisions),
        )

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.time.steps + 1, self.space.cells + 1, self.simplex.size

    def describe(self) -> dict:
        return {
            "T": self.time.horizon, "N": self.time.steps, "dt": self.time.dt,
            "x_lo": self.space.lo, "x_hi": self.space.hi, "L": self.space.cells, "dx": self.space.dx,
            "I": self.simplex.scenario_count, "M": self.simplex.divisions, "nodes_p": self.simplex.size,
        }
