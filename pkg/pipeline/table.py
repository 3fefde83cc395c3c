# dynkin/pipeline/table.py
from __future__ import annotations
import time
from dataclasses import dataclass, replace

import numpy as np

from analysis.errors import ConvergenceReport, convergence_table, errors_vs
from config import REFERENCE_STEPS, ConfigError, RunConfig, paths_for_run
from pipeline.run import build_grids, build_problem, solve_once
from reports.plot_scripts import convergence_script, write_script
from reports.report_generator import write_convergence, write_manifest

# refining x or p refines t with it: the SL projection error per level is
# O(Δx²) (resp. O(Δp²)) and accumulates over N = T/Δt levels
TIED = {"x": "t", "p": "t"}
# the fine SL reference is at least this many times finer than the finest row
REFERENCE_FACTOR = 8


@dataclass(frozen=True)
class TablePlan:
    coarse: int
    finest: int
    held: dict[str, dict[str, int]]   # refined axis -> sizes of the axes held fixed

    def sizes(self, axis: str, size: int) -> tuple[int, int, int]:
        s = {**self.held[axis], axis: size}
        if axis in TIED:
            s[TIED[axis]] = size
        return s["t"], s["x"], s["p"]


_SMALL = TablePlan(8, 32, {"t": {"x": 256, "p": 8}, "x": {"p": 8}, "p": {"x": 64}})
TABLE_PLAN = {
    # t: x held 4x finer than the finest row
    "exp1": TablePlan(64, 1024, {"t": {"x": 4096, "p": 1}, "x": {"p": 1}, "p": {"x": 1024}}),
    "exp2": _SMALL,
    "exp3": _SMALL,
    "custom": _SMALL,
}


def refinement_sizes(preset: str, levels: int | None) -> tuple[list[int], TablePlan]:
    plan = TABLE_PLAN[preset]
    rows = levels or int(round(np.log2(plan.finest / plan.coarse))) + 1
    sizes = [plan.finest >> (rows - 1 - k) for k in range(rows)]
    if sizes[0] < 1:
        raise ConfigError(f"too many levels ({rows}) for finest size {plan.finest}")
    return sizes, plan


def reference_sizes(plan: TablePlan, axis: str, steps: int = REFERENCE_STEPS) -> tuple[int, int, int]:
    """Grid of the SL reference: refined (and tied) axes at `steps`, held axes as in the rows."""
    if steps < REFERENCE_FACTOR * plan.finest or steps % plan.finest:
        raise ConfigError(
            f"reference size {steps} must be a multiple of {plan.finest} "
            f"and at least {REFERENCE_FACTOR}x finer"
        )
    return plan.sizes(axis, steps)


def run_table(cfg: RunConfig, verbose: bool = True) -> ConvergenceReport:
    """Halving sequence along one axis; x and p drag t along, the rest is held."""
    problem = build_problem(cfg)
    axis = cfg.axis
    if axis == "p" and problem.scenario_count < 2:
        raise ConfigError(f"preset {cfg.preset} has a single scenario; nothing to refine in p")
    sizes, plan = refinement_sizes(cfg.preset, cfg.levels)
    tag = f"{cfg.preset}_{cfg.scheme}_conv_{axis}"
    paths = paths_for_run(tag, cfg.out)
    started = time.perf_counter()

    if problem.exact is not None:
        reference = problem.exact
        ref_note = "exact solution"
    else:
        rn, rl, rm = reference_sizes(plan, axis)
        if verbose:
            print(f"[table] computing SL reference at N={rn} L={rl} M={rm}")
        reference, _ = solve_once(replace(cfg, scheme="sl"), problem, build_grids(problem, rn, rl, rm))
        ref_note = f"SL reference at N={rn} L={rl} M={rm}"

    rows = []
    for size in sizes:
        n, l, m = plan.sizes(axis, size)
        grids = build_grids(problem, n, l, m)
        field_, _ = solve_once(cfg, problem, grids)
        mx, rms = errors_vs(field_, reference)
        delta = {"t": grids.time.dt, "x": grids.space.dx, "p": grids.simplex.dp}[axis]
        rows.append((delta, mx, rms))
        if verbose:
            print(f"[table] {axis}: N={n} L={l} M={m} delta={delta:.3e} MAX={mx:.3e} RMS={rms:.3e}")

    report = convergence_table(rows, scheme=cfg.scheme, axis=axis)
    held = plan.held[axis]
    notes = [
        f"reference: {ref_note}",
        f"refined axis {axis}" + (f" with {TIED[axis]} tied to it" if axis in TIED else ""),
        "held: " + ", ".join(f"{k}={v}" for k, v in sorted(held.items())),
        "rate = log2(e_(k-1) / e_k)",
    ]
    write_convergence(paths.convergence_csv, paths.convergence_md, cfg.preset, axis, [report], notes)
    write_script(paths.plot_script("convergence"),
                 convergence_script(paths.convergence_csv, f"{tag}.png", [2, 4], f"{tag}"))
    write_manifest(paths.manifest, {
        "preset": cfg.preset, "scheme": cfg.scheme, "axis": axis, "sizes": sizes,
        "tied": TIED.get(axis), "held": held, "reference": ref_note, "run": cfg.knobs(),
        "rows": report.frame.astype(object).where(report.frame.notna(), None).to_dict(orient="records"),
        "wall_time": time.perf_counter() - started,
    })
    if verbose:
        print(report.to_markdown())
        print(f"[table] wrote {paths.convergence_csv}")
    return report
