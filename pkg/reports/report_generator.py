# dynkin/reports/report_generator.py
from __future__ import annotations
import platform
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from tabulate import tabulate

from analysis.errors import ConvergenceReport, merge_reports
from mesh.field import SolutionField
from problem.spec import ProblemSpec
from utils.io import write_csv_atomic, write_json_utf8, write_text_utf8


def _sec(title: str) -> str:
    return f"\n\n# {title}\n"


def _md_table(rows, headers) -> str:
    return tabulate(rows, headers=headers, tablefmt="github")


def _finite(v: float) -> Optional[float]:
    return float(v) if np.isfinite(v) else None


def bound_slack(field: SolutionField, problem: ProblemSpec) -> dict:
    """Smallest distance to each obstacle over all nodes (negative means violated)."""
    if not problem.has_obstacles:
        return {}
    g = field.grids
    x, P = g.space.nodes, g.simplex.nodes
    lo_gap, hi_gap = np.inf, np.inf
    for n, t in enumerate(g.time.nodes):
        lower, upper = problem.obstacle_bounds(t, x, P)
        lo_gap = min(lo_gap, float(np.min(field.values[n] - lower)))
        hi_gap = min(hi_gap, float(np.min(upper - field.values[n])))
    return {"lower": _finite(lo_gap), "upper": _finite(hi_gap)}


def solution_manifest(problem: ProblemSpec, field: SolutionField, knobs: dict, extra: Optional[dict] = None) -> dict:
    """JSON-ready record of one solve. Only `wall_time` varies between identical runs."""
    diag = dict(field.diagnostics)
    wall = diag.pop("wall_time", None)
    out = {
        "problem": problem.name,
        "problem_metadata": problem.metadata,
        "grids": field.grids.describe(),
        "solver": diag,
        "run": knobs,
        "u_min": float(field.values.min()),
        "u_max": float(field.values.max()),
        "bound_slack": bound_slack(field, problem),
        "wall_time": wall,
        "python": platform.python_version(),
    }
    if extra:
        out.update(extra)
    return out


def write_manifest(path: Path, manifest: dict) -> None:
    write_json_utf8(path, manifest)


def write_frame(path: Path, frame: pd.DataFrame) -> None:
    write_csv_atomic(path, frame)


def write_convergence(csv_path: Path, md_path: Path, preset: str, axis: str,
                      reports: Sequence[ConvergenceReport], notes: Sequence[str] = ()) -> pd.DataFrame:
    """CSV (Δ, MAX, rate, RMS, rate per scheme) plus a short markdown report."""
    frame = merge_reports(reports)
    write_csv_atomic(csv_path, frame)

    lines = [f"# Convergence – {preset}, refinement in {axis}\n"]
    for r in reports:
        lines.append(_sec(f"Scheme: {r.scheme}"))
        lines.append(r.to_markdown())
    if notes:
        lines.append(_sec("Notes"))
        lines += [f"- {n}" for n in notes]
    write_text_utf8(md_path, "\n".join(lines) + "\n")
    return frame


def summary_rows(manifest: dict) -> str:
    """Two-column console summary of a manifest."""
    rows = [
        ["problem", manifest.get("problem")],
        ["grid", "N={N} L={L} M={M}".format(**manifest["grids"])],
        ["scheme", manifest["solver"].get("scheme")],
        ["u range", f"[{manifest['u_min']:.6g}, {manifest['u_max']:.6g}]"],
    ]
    for k, v in (manifest.get("bound_slack") or {}).items():
        rows.append([f"slack {k}", v])
    return _md_table(rows, ["key", "value"])
