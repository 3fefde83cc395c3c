# dynkin/pipeline/run.py
from __future__ import annotations
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from analysis.boundary import active_sets, waiting_connected
from analysis.errors import errors_vs
from analysis.profiles import convexity_gap, scheme_gap_bound
from analysis.regularity import lip_p_bound, regularity_constants
from config import ConfigError, RunConfig, RunPaths, paths_for_run
from mesh.field import SolutionField
from mesh.grids import GridSet
from nn.trainers import TrainConfig
from problem import get_preset, problem_from_mapping
from problem.spec import ProblemSpec, check_compatibility
from reports.plot_scripts import surface_script, write_script
from reports.report_generator import solution_manifest, summary_rows, write_frame, write_manifest
from schemes.solver_nn import NNSolverConfig, ResidualTrace, solve_nn
from schemes.solver_sl import SolverConfig, solve


@dataclass
class RunResult:
    problem: ProblemSpec
    field: SolutionField
    paths: Optional[RunPaths] = None
    trace: Optional[ResidualTrace] = None
    manifest: dict = field(default_factory=dict)


def build_problem(cfg: RunConfig) -> ProblemSpec:
    if cfg.preset == "custom":
        try:
            return problem_from_mapping(cfg.problem)
        except ValueError as e:
            raise ConfigError(str(e)) from e
    return get_preset(cfg.preset)


def build_grids(problem: ProblemSpec, n: int, l: int, m: int) -> GridSet:
    return GridSet.uniform(problem.horizon, problem.domain, n, l, problem.scenario_count, m)


def solver_config(cfg: RunConfig, problem: ProblemSpec, grids: GridSet) -> SolverConfig:
    try:
        return SolverConfig.for_problem(problem, grids, clamp=cfg.clamp, convexify=cfg.convexify,
                                        source=cfg.source, workers=cfg.workers)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def solve_once(cfg: RunConfig, problem: ProblemSpec, grids: GridSet, verbose: bool = False
               ) -> tuple[SolutionField, Optional[ResidualTrace]]:
    """One solve with the scheme named in cfg."""
    sc = solver_config(cfg, problem, grids)
    if cfg.scheme == "sl":
        return solve(problem, sc, verbose=verbose), None
    nn_cfg = NNSolverConfig(sc, TrainConfig(optimizer=cfg.optimizer, seed=cfg.seed),
                            hidden=cfg.hidden, seed=cfg.seed, workers=cfg.workers)
    return solve_nn(problem, nn_cfg, verbose=verbose)


def run_checks(cfg: RunConfig, problem: ProblemSpec, field_: SolutionField,
               trace: Optional[ResidualTrace], verbose: bool = False) -> dict:
    """Diagnostics recorded next to every solve."""
    g = field_.grids
    checks: dict = {"regularity": regularity_constants(field_).as_dict()}
    if problem.has_obstacles:
        checks["compatible"] = check_compatibility(problem, g.space.nodes, g.simplex.nodes)
        checks["lip_p_bound"] = lip_p_bound(problem, field_)
        mask = active_sets(field_, problem, cfg.p if problem.scenario_count == 2 else 0, cfg.tol)
        conn = waiting_connected(mask)
        checks["active_sets"] = {"p": cfg.p, "tol": cfg.tol, **mask.counts(),
                                 "waiting_connected_levels": int(conn.sum()), "levels": int(conn.size)}
    if problem.exact is not None:
        mx, rms = errors_vs(field_, problem.exact)
        checks["error_vs_exact"] = {"max": mx, "rms": rms}
    if problem.scenario_count == 2 and g.simplex.divisions % 2 == 0:
        checks["convexity_gap_min"] = float(np.min(convexity_gap(field_)))
    if trace is not None:
        checks["sum_eps"] = trace.total
        sl_field, _ = solve_once(replace(cfg, scheme="sl"), problem, g)
        checks["scheme_gap"] = scheme_gap_bound(field_, sl_field, trace.eps)
        if verbose:
            sg = checks["scheme_gap"]
            mark = "✔" if sg["holds"] else "✗"
            print(f"[run] {mark} |NN-SL| = {sg['lhs']:.3e} <= bound {sg['rhs']:.3e}")
    return checks


def run_solve(cfg: RunConfig, verbose: bool = True) -> RunResult:
    """Solve one configuration and write CSV, manifest, residuals (nn) and a surface script."""
    problem = build_problem(cfg)
    grids = build_grids(problem, cfg.n, cfg.l, cfg.m)
    tag = f"{cfg.preset}_{cfg.scheme}"
    paths = paths_for_run(tag, cfg.out)
    if verbose:
        print(f"[run] {tag}: N={cfg.n} L={cfg.l} M={cfg.m} → {paths.root}")

    field_, trace = solve_once(cfg, problem, grids, verbose=verbose)
    field_.to_csv(paths.solution_csv)
    if verbose:
        print(f"[run] wrote {paths.solution_csv}")
    if trace is not None:
        write_frame(paths.residuals_csv, trace.to_frame())
        write_frame(paths.training_csv, trace.training_frame())
        if verbose:
            print(f"[run] wrote {paths.residuals_csv}")
            print(f"[run] wrote {paths.training_csv}")

    checks = run_checks(cfg, problem, field_, trace, verbose=verbose)
    manifest = solution_manifest(problem, field_, cfg.knobs(), {"checks": checks})
    write_manifest(paths.manifest, manifest)
    p_plot = float(grids.simplex.nodes[0, 0]) if problem.scenario_count <= 2 else 0.0
    write_script(paths.plot_script("surface"),
                 surface_script(paths.solution_csv, f"{tag}_surface.png", p_plot, f"{tag} at p={p_plot}"))
    if verbose:
        print(f"[run] wrote {paths.manifest}")
        print(summary_rows(manifest))
    return RunResult(problem, field_, paths, trace, manifest)
