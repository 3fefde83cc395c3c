# dynkin/pipeline/boundary.py
from __future__ import annotations
import time

from analysis.boundary import ActiveSetMask, active_sets, waiting_connected
from analysis.profiles import scenario_average, snapshot
from config import ConfigError, RunConfig, paths_for_run
from pipeline.run import build_grids, build_problem, solve_once
from reports.plot_scripts import active_set_script, snapshot_script, write_script
from reports.report_generator import solution_manifest, write_frame, write_manifest


def run_boundary(cfg: RunConfig, verbose: bool = True) -> ActiveSetMask:
    """Active-set masks at belief p, a t=0 snapshot against the obstacles, and a manifest."""
    problem = build_problem(cfg)
    if not problem.has_obstacles:
        raise ConfigError(f"preset {cfg.preset} has no obstacles; no free boundary to extract")
    if problem.scenario_count > 2:
        raise ConfigError("boundary extraction takes a scalar p; use a two-scenario problem")
    grids = build_grids(problem, cfg.n, cfg.l, cfg.m)
    tag = f"{cfg.preset}_{cfg.scheme}_boundary_p{cfg.p:g}"
    paths = paths_for_run(tag, cfg.out)
    started = time.perf_counter()

    field_, _ = solve_once(cfg, problem, grids, verbose=verbose)
    p = cfg.p if problem.scenario_count == 2 else 0
    mask = active_sets(field_, problem, p, cfg.tol)
    write_frame(paths.active_csv, mask.to_frame())
    write_script(paths.plot_script("active"),
                 active_set_script(paths.active_csv, f"{tag}_active.png", f"{tag} tol={cfg.tol:g}"))

    snap_csv = paths.root / f"{tag}_snapshot.csv"
    write_frame(snap_csv, snapshot(field_, problem, 0.0, mask.p))
    write_script(paths.plot_script("snapshot"),
                 snapshot_script(snap_csv, f"{tag}_snapshot.png", f"{tag} at t=0"))
    if problem.scenario_count == 2:
        avg_csv = paths.root / f"{tag}_average.csv"
        write_frame(avg_csv, scenario_average(field_, problem, 0.0))
        write_script(paths.plot_script("average"),
                     snapshot_script(avg_csv, f"{tag}_average.png", f"{tag} scenario average at t=0"))

    conn = waiting_connected(mask)
    counts = mask.counts()
    manifest = solution_manifest(problem, field_, cfg.knobs(), {
        "active_sets": {
            "p": [float(v) for v in mask.p], "tol": cfg.tol, **counts,
            "waiting_connected_levels": int(conn.sum()), "levels": int(conn.size),
        },
    })
    manifest["wall_time"] = time.perf_counter() - started
    write_manifest(paths.manifest, manifest)
    if verbose:
        mark = "✔" if conn.all() else "✗"
        print(f"[boundary] lower={counts['lower']} upper={counts['upper']} waiting={counts['waiting']}")
        print(f"[boundary] {mark} waiting region connected on {int(conn.sum())}/{conn.size} levels")
        print(f"[boundary] wrote {paths.active_csv}")
    return mask
