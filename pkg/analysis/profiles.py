# dynkin/analysis/profiles.py
# Curves and gaps extracted from solution fields for plots and acceptance checks.
from __future__ import annotations

import numpy as np
import pandas as pd

from analysis.regularity import regularity_constants
from mesh.field import SolutionField
from problem.spec import ProblemSpec


def _require_two(field: SolutionField, what: str) -> None:
    if field.grids.simplex.scenario_count != 2:
        raise ValueError(f"{what} needs two scenarios")


def convexity_gap(field: SolutionField) -> np.ndarray:
    """½(u(·,·,0) + u(·,·,1)) − u(·,·,½) on the (t, x) grid; >= 0 when u is convex in p."""
    _require_two(field, "convexity_gap")
    mid = np.stack([field.slice_at(n, 0.5) for n in range(field.shape[0])])
    return 0.5 * (field.values[:, :, 0] + field.values[:, :, -1]) - mid


def profiles(field: SolutionField, t: float, x: float, p, axis: str) -> pd.DataFrame:
    """u along one axis through (t, x, p): grid nodes of that axis, the other two fixed."""
    g = field.grids
    if axis == "t":
        coords = g.time.nodes
        vals = [field.value_at(s, x, p) for s in coords]
    elif axis == "x":
        coords = g.space.nodes
        vals = [field.value_at(t, s, p) for s in coords]
    elif axis == "p":
        coords = g.simplex.first_coordinate
        vals = [field.value_at(t, x, q) for q in g.simplex.nodes]
    else:
        raise ValueError(f"axis must be one of t, x, p; got '{axis}'")
    return pd.DataFrame({axis: coords, "u": np.asarray(vals, dtype=float)})


def snapshot(field: SolutionField, problem: ProblemSpec, t: float, p) -> pd.DataFrame:
    """u(t, ·, p) together with both obstacles p·f and p·h on the x grid."""
    g = field.grids
    point = g.simplex.as_point(p)
    x = g.space.nodes
    u = np.array([field.value_at(t, s, point) for s in x])
    lower, upper = problem.obstacle_bounds(t, x, point[None, :])
    return pd.DataFrame({"x": x, "u": u, "lower": lower[:, 0], "upper": upper[:, 0]})


def scenario_average(field: SolutionField, problem: ProblemSpec, t: float) -> pd.DataFrame:
    """½(u(t,·,1) + u(t,·,0)) next to the averaged obstacles ½(f_1+f_2), ½(h_1+h_2)."""
    _require_two(field, "scenario_average")
    x = field.grids.space.nodes
    u0 = np.array([field.value_at(t, s, 0.0) for s in x])
    u1 = np.array([field.value_at(t, s, 1.0) for s in x])
    out = {"x": x, "u": 0.5 * (u0 + u1)}
    half = np.array([[0.5, 0.5]])
    lower, upper = problem.obstacle_bounds(t, x, half)
    out["lower"] = lower[:, 0]
    out["upper"] = upper[:, 0]
    return pd.DataFrame(out)


def pointwise_gap(a: SolutionField, b: SolutionField, t: float, p) -> pd.DataFrame:
    """a − b along x at fixed (t, p); both fields must share the x grid."""
    if a.grids.space.cells != b.grids.space.cells:
        raise ValueError("pointwise_gap needs fields on the same x grid")
    x = a.grids.space.nodes
    gap = np.array([a.value_at(t, s, p) - b.value_at(t, s, p) for s in x])
    return pd.DataFrame({"x": x, "gap": gap})


def scheme_gap_bound(nn_field: SolutionField, sl_field: SolutionField, eps) -> dict:
    """max nodal |NN − SL| against 2·N·lip_x·Δx + Σ ε^n, lip_x taken from the SL field."""
    if nn_field.shape != sl_field.shape:
        raise ValueError("scheme_gap_bound needs fields on the same grid")
    g = sl_field.grids
    lhs = float(np.max(np.abs(nn_field.values - sl_field.values)))
    lip_x = regularity_constants(sl_field).lip_x
    rhs = 2.0 * g.time.steps * lip_x * g.space.dx + float(np.sum(eps))
    return {"lhs": lhs, "rhs": rhs, "lip_x": lip_x, "sum_eps": float(np.sum(eps)),
            "slack": rhs - lhs, "holds": bool(lhs <= rhs)}
