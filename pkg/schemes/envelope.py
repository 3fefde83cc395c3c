# dynkin/schemes/envelope.py
"""Lower convex envelope of nodal data on the simplex grid.

Two routes compute the same object:
  - I = 2: monotone-chain lower hull over (p_m, v_m), then linear
    interpolation between hull vertices;
  - I >= 3: one linear program per node, min Σλ_j v_j subject to λ >= 0,
    Σλ_j = 1 and Σλ_j p_j = p_m (HiGHS dual simplex).

The support of a node (at most I nodes with barycentric weights) is what the
p-interpolant and the belief-feedback distributions are built from. A node on
the envelope supports itself; otherwise, when several supports are optimal,
the lexicographically smallest node tuple is used. For I = 2 both routes keep
only the extreme hull vertices.
"""
from __future__ import annotations
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from mesh.grids import SIMPLEX_ATOL, SimplexGrid

# HiGHS tolerances for the per-node LP
LP_TOL = 1e-10
# residual and reduced-cost slack when matching a support to its target
HULL_ATOL = 1e-9
# tie-break rule recorded in run manifests
TIE_BREAK_VERSION = "vertex-self-support+lexicographic/v2"


@dataclass(frozen=True)
class SupportWeights:
    nodes: np.ndarray      # node indices, ascending
    weights: np.ndarray    # λ >= 0, Σλ = 1

    def point(self, grid: SimplexGrid) -> np.ndarray:
        return self.weights @ grid.nodes[self.nodes]

    def value(self, level_values: np.ndarray) -> float:
        return float(np.dot(np.asarray(level_values)[self.nodes], self.weights))


def _self_support(m: int) -> SupportWeights:
    return SupportWeights(np.array([m]), np.array([1.0]))


@dataclass
class EnvelopeResult:
    """Envelope values at every node plus the hull vertices.

    Supports are derived lazily from the vertex set: a vertex supports itself,
    any other node is supported by the vertices of the envelope cell around it.
    """
    values: np.ndarray
    vertices: np.ndarray
    grid: SimplexGrid
    _supports: dict = field(default_factory=dict, repr=False)

    def support(self, m: int) -> SupportWeights:
        if m not in self._supports:
            if self.vertices[m]:
                self._supports[m] = _self_support(m)
            else:
                self._supports[m] = support_at(self, self.grid.nodes[m])
        return self._supports[m]


def _validate(grid: SimplexGrid, values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.shape != (grid.size,):
        raise ValueError(f"values must have shape ({grid.size},), got {v.shape}")
    if grid.size < grid.scenario_count:
        raise ValueError(f"need at least {grid.scenario_count} nodes, got {grid.size}")
    if not np.all(np.isfinite(v)):
        raise ValueError("envelope input contains non-finite values")
    return v


def _lower_hull(p: np.ndarray, v: np.ndarray) -> list[int]:
    """Andrew monotone chain, lower part; p strictly increasing. Collinear points are dropped."""
    tol = 1e-12 * max(1.0, float(np.max(np.abs(v))))
    p, v = np.asarray(p, dtype=float).tolist(), np.asarray(v, dtype=float).tolist()
    hull: list[int] = []
    for k in range(len(p)):
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (p[a] - p[o]) * (v[k] - v[o]) - (v[a] - v[o]) * (p[k] - p[o])
            if cross > tol:
                break
            hull.pop()
        hull.append(k)
    return hull


def _envelope_two(grid: SimplexGrid, v: np.ndarray) -> EnvelopeResult:
    p = grid.first_coordinate
    hull = _lower_hull(p, v)
    env = np.minimum(np.interp(p, p[hull], v[hull]), v)
    vertices = np.zeros(grid.size, dtype=bool)
    vertices[hull] = True
    return EnvelopeResult(env, vertices, grid)


def _barycentric(grid: SimplexGrid, nodes: list[int], target: np.ndarray) -> Optional[np.ndarray]:
    """Weights λ > 0 with Σλ = 1 and Σλ π = target on affinely independent nodes, else None."""
    I = grid.scenario_count
    A = np.vstack([np.ones(len(nodes)), grid.nodes[nodes, : I - 1].T])
    if np.linalg.matrix_rank(A) < len(nodes):
        return None
    b = np.concatenate([[1.0], target[: I - 1]])
    lam, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.max(np.abs(A @ lam - b)) > HULL_ATOL or lam.min() <= LP_TOL:
        return None
    return lam / lam.sum()


def _first_support(grid: SimplexGrid, touching: np.ndarray, target: np.ndarray) -> Optional[SupportWeights]:
    """Lexicographically smallest node tuple (prefixes first) around target."""
    I = grid.scenario_count

    def walk(prefix: list[int], start: int) -> Optional[SupportWeights]:
        if prefix:
            lam = _barycentric(grid, prefix, target)
            if lam is not None:
                return SupportWeights(np.array(prefix), lam)
        if len(prefix) == I:
            return None
        for k in range(start, len(touching)):
            hit = walk(prefix + [int(touching[k])], k + 1)
            if hit is not None:
                return hit
        return None

    return walk([], 0)


def _solve_node_lp(grid: SimplexGrid, v: np.ndarray, target: np.ndarray,
                   candidates: Optional[np.ndarray] = None) -> tuple[float, SupportWeights]:
    """Envelope value at target and its support.

    The LP fixes the value and the supporting hyperplane; among the optimal
    supports (nodes on that hyperplane) the lexicographically smallest wins.
    """
    idx = np.arange(grid.size) if candidates is None else np.sort(np.asarray(candidates, dtype=int))
    I = grid.scenario_count
    # Σλ = 1 plus the first I-1 coordinates; the last is implied
    A = np.vstack([np.ones(len(idx)), grid.nodes[idx, : I - 1].T])
    b = np.concatenate([[1.0], target[: I - 1]])
    res = linprog(
        v[idx], A_eq=A, b_eq=b, bounds=(0, None), method="highs-ds",
        options={"primal_feasibility_tolerance": LP_TOL, "dual_feasibility_tolerance": LP_TOL},
    )
    if res.status != 0:
        raise ValueError(f"envelope LP failed at p={target.tolist()}: {res.message}")
    marginals = getattr(getattr(res, "eqlin", None), "marginals", None)
    if marginals is not None:
        # reduced costs vanish exactly on the supporting hyperplane
        reduced = v[idx] - A.T @ np.asarray(marginals)
        touching = idx[reduced <= HULL_ATOL * max(1.0, float(np.max(np.abs(v[idx]))))]
    else:
        touching = idx[res.x > LP_TOL]
    sup = _first_support(grid, touching, target)
    if sup is None:
        active = np.flatnonzero(res.x > LP_TOL)
        sup = SupportWeights(idx[active], res.x[active] / res.x[active].sum())
    return float(res.fun), sup


def lower_convex_envelope_lp(grid: SimplexGrid, values) -> EnvelopeResult:
    """Per-node LP envelope for any I (also the oracle for the I = 2 hull)."""
    v = _validate(grid, values)
    env = np.empty_like(v)
    supports: dict[int, SupportWeights] = {}
    vertices = np.zeros(grid.size, dtype=bool)
    for m in range(grid.size):
        val, sup = _solve_node_lp(grid, v, grid.nodes[m])
        # a node whose own value attains the minimum supports itself
        if v[m] <= val + LP_TOL * max(1.0, abs(val)):
            val, sup = v[m], _self_support(m)
            vertices[m] = True
        env[m] = min(val, v[m])
        supports[m] = sup
    if grid.scenario_count == 2:
        # keep the extreme points only; collinear nodes take the bracketing cell
        touch = np.flatnonzero(vertices)
        vertices[:] = False
        vertices[touch[_lower_hull(grid.first_coordinate[touch], v[touch])]] = True
        supports = {}
    return EnvelopeResult(env, vertices, grid, supports)


def lower_convex_envelope(grid: SimplexGrid, values) -> EnvelopeResult:
    v = _validate(grid, values)
    if grid.scenario_count == 1:
        return EnvelopeResult(v.copy(), np.ones(1, dtype=bool), grid)
    if grid.scenario_count == 2:
        return _envelope_two(grid, v)
    return lower_convex_envelope_lp(grid, v)


def envelope_from_vertices(grid: SimplexGrid, values, vertices) -> EnvelopeResult:
    """Rebuild an EnvelopeResult from stored envelope values and vertex mask."""
    return EnvelopeResult(np.asarray(values, dtype=float), np.asarray(vertices, dtype=bool), grid)


def support_at(envelope: EnvelopeResult, p) -> SupportWeights:
    """Envelope cell containing p; a vertex hit returns the vertex with λ = 1."""
    grid = envelope.grid
    p = grid.as_point(p)
    verts = np.flatnonzero(envelope.vertices)
    hit = np.flatnonzero(np.abs(grid.nodes[verts] - p).max(axis=1) <= SIMPLEX_ATOL)
    if hit.size:
        return _self_support(int(verts[hit[0]]))
    if grid.scenario_count == 2:
        q = grid.first_coordinate[verts]
        j = int(np.searchsorted(q, p[0]))
        if j == 0 or j == len(verts):
            raise ValueError(f"point {p.tolist()} is not bracketed by envelope vertices")
        a, b = verts[j - 1], verts[j]
        w = (p[0] - grid.first_coordinate[a]) / (grid.first_coordinate[b] - grid.first_coordinate[a])
        return SupportWeights(np.array([a, b]), np.array([1.0 - w, w]))
    _, sup = _solve_node_lp(grid, envelope.values, p, candidates=verts)
    return sup


def envelope_value_at(envelope: EnvelopeResult, p) -> float:
    return support_at(envelope, p).value(envelope.values)


def is_discretely_convex(grid: SimplexGrid, values, atol: float = 1e-10) -> bool:
    """Second differences >= −atol (I = 2); for I >= 3, values equal their own envelope."""
    v = np.asarray(values, dtype=float)
    if grid.scenario_count == 1:
        return True
    if grid.scenario_count == 2:
        return bool(np.all(v[:-2] - 2.0 * v[1:-1] + v[2:] >= -atol))
    env = lower_convex_envelope(grid, v).values
    return bool(np.max(v - env) <= atol)


# -------------------------------------------------------------------
# Belief feedbacks
# -------------------------------------------------------------------
@dataclass(frozen=True)
class FeedbackDistribution:
    outcomes: np.ndarray       # node indices
    probabilities: np.ndarray
    points: np.ndarray         # (k, I) coordinates of the outcomes

    def mean(self) -> np.ndarray:
        return self.probabilities @ self.points


def feedback_distribution(envelope: EnvelopeResult, m: int, i: int) -> FeedbackDistribution:
    """Law of the next belief given the informed player's scenario i (0-based).

    Outcome π_ℓ of the support of p_m has probability (π_ℓ)_i·λ_ℓ / (p_m)_i;
    a zero coordinate (p_m)_i gives the point mass at p_m.
    """
    grid = envelope.grid
    if not 0 <= i < grid.scenario_count:
        raise ValueError(f"scenario index {i} out of range [0, {grid.scenario_count})")
    p = grid.nodes[m]
    if p[i] <= 0.0:
        return FeedbackDistribution(np.array([m]), np.array([1.0]), grid.nodes[[m]])
    sup = envelope.support(m)
    probs = grid.nodes[sup.nodes, i] * sup.weights / p[i]
    return FeedbackDistribution(sup.nodes.copy(), probs, grid.nodes[sup.nodes])


def feedback_marginal(envelope: EnvelopeResult, m: int) -> FeedbackDistribution:
    """Mixture over i with weights (p_m)_i; merges equal outcomes."""
    grid = envelope.grid
    p = grid.nodes[m]
    acc: dict[int, float] = {}
    for i in range(grid.scenario_count):
        if p[i] <= 0.0:
            continue
        d = feedback_distribution(envelope, m, i)
        for node, prob in zip(d.outcomes, d.probabilities):
            acc[int(node)] = acc.get(int(node), 0.0) + p[i] * prob
    nodes = np.array(sorted(acc), dtype=int)
    probs = np.array([acc[k] for k in nodes])
    return FeedbackDistribution(nodes, probs, grid.nodes[nodes])
