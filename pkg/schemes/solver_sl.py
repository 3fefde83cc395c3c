# dynkin/schemes/solver_sl.py
from __future__ import annotations
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from mesh.field import SolutionField
from mesh.grids import GridSet
from problem.spec import ProblemSpec
from schemes.envelope import TIE_BREAK_VERSION, feedback_marginal, lower_convex_envelope
from schemes.stepper import EulerStep, ShockSet, count_clamped, expected_value


class SolverError(RuntimeError):
    """Non-finite value produced at grid node (n, l, m)."""

    def __init__(self, n: int, l: int, m: int, detail: str = ""):
        self.n, self.l, self.m = n, l, m
        msg = f"[solve] non-finite value at level n={n}, x-node l={l}, p-node m={m}"
        super().__init__(f"{msg}: {detail}" if detail else msg)


@dataclass
class SolverConfig:
    grids: GridSet
    clamp_obstacles: bool = False
    convexify: bool = False
    source: bool = False
    shocks: ShockSet = field(default_factory=ShockSet.two_point)
    workers: int = 1

    @classmethod
    def for_problem(cls, problem: ProblemSpec, grids: GridSet, clamp: Optional[bool] = None,
                    convexify: Optional[bool] = None, source: Optional[bool] = None, **kw) -> "SolverConfig":
        """Flags default to what the problem needs: clamp iff obstacles, envelope iff I >= 2, source iff present."""
        return cls(
            grids=grids,
            clamp_obstacles=problem.has_obstacles if clamp is None else clamp,
            convexify=problem.scenario_count >= 2 if convexify is None else convexify,
            source=problem.source is not None if source is None else source,
            **kw,
        ).check(problem)

    def check(self, problem: ProblemSpec) -> "SolverConfig":
        if self.convexify and problem.scenario_count < 2:
            raise ValueError("convexify requires scenario_count >= 2")
        if self.clamp_obstacles and not problem.has_obstacles:
            raise ValueError("clamp_obstacles requires at least one obstacle")
        if self.grids.simplex.scenario_count != problem.scenario_count:
            raise ValueError("simplex grid and problem disagree on the scenario count")
        if abs(self.grids.time.horizon - problem.horizon) > 1e-12:
            raise ValueError("time grid horizon differs from the problem horizon")
        lo, hi = problem.domain
        if abs(self.grids.space.lo - lo) > 1e-12 or abs(self.grids.space.hi - hi) > 1e-12:
            raise ValueError("space grid does not cover the problem domain")
        return self

    def knobs(self) -> dict:
        return {
            "clamp_obstacles": self.clamp_obstacles,
            "convexify": self.convexify,
            "source": self.source,
            "shocks": self.shocks.name,
            "extrapolation": "clamp",
            "tie_break": TIE_BREAK_VERSION,
        }


def check_finite(values: np.ndarray, n: int, what: str) -> None:
    bad = np.argwhere(~np.isfinite(values))
    if bad.size:
        l, m = (int(i) for i in bad[0])
        raise SolverError(n, l, m, what)


def check_coefficients(step: EulerStep, n: int) -> None:
    bad = np.flatnonzero(~(np.isfinite(step.drift) & np.isfinite(step.diffusion)))
    if bad.size:
        raise SolverError(n, int(bad[0]), 0, "non-finite drift or diffusion")


def clamp_to_obstacles(problem: ProblemSpec, t: float, x: np.ndarray, P: np.ndarray, y: np.ndarray) -> np.ndarray:
    lower, upper = problem.obstacle_bounds(t, x, P)
    return np.minimum(np.maximum(y, lower), upper)


def convexify_level(grids: GridSet, level: np.ndarray, workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Lower envelope of every p-row of a (L+1, M) level; returns (values, vertex mask)."""
    simplex = grids.simplex

    def _row(l: int):
        env = lower_convex_envelope(simplex, level[l])
        return env.values, env.vertices

    if workers > 1 and simplex.scenario_count >= 3:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_row, range(level.shape[0])))
    else:
        rows = [_row(l) for l in range(level.shape[0])]
    return np.stack([r[0] for r in rows]), np.stack([r[1] for r in rows])


def source_and_clamp(problem: ProblemSpec, config: SolverConfig, n: int, y: np.ndarray) -> np.ndarray:
    """y + Δt·H (if enabled), then the obstacle clamp (if enabled)."""
    g = config.grids
    t, x, P = g.time.nodes[n], g.space.nodes, g.simplex.nodes
    if config.source:
        y = y + g.time.dt * problem.source_values(t, x, P)
    if config.clamp_obstacles:
        y = clamp_to_obstacles(problem, t, x, P, y)
    return y


def continuation(problem: ProblemSpec, config: SolverConfig, n: int, upper_level: np.ndarray) -> np.ndarray:
    """Ȳ at level n from level n+1: expectation, source, clamp (no envelope)."""
    g = config.grids
    x = g.space.nodes
    step = EulerStep.from_problem(problem, g.time.nodes[n], g.time.dt, x, config.shocks)
    check_coefficients(step, n)
    return source_and_clamp(problem, config, n, expected_value(step, x, upper_level, g.space))


def solve(problem: ProblemSpec, config: SolverConfig, verbose: bool = False) -> SolutionField:
    """Backward sweep: terminal data, then per level expectation → source → clamp → envelope."""
    config.check(problem)
    g = config.grids
    N = g.time.steps
    x, P = g.space.nodes, g.simplex.nodes
    values = np.empty(g.shape)
    vertex_mask = np.ones(g.shape, dtype=bool) if config.convexify else None
    started = time.perf_counter()

    values[N] = problem.terminal_values(x, P)
    check_finite(values[N], N, "terminal data")
    clamped = 0
    for n in range(N - 1, -1, -1):
        step = EulerStep.from_problem(problem, g.time.nodes[n], g.time.dt, x, config.shocks)
        check_coefficients(step, n)
        clamped += count_clamped(step, x, g.space)
        level = continuation(problem, config, n, values[n + 1])
        check_finite(level, n, "after expectation/clamp")
        if config.convexify:
            level, vertex_mask[n] = convexify_level(g, level, config.workers)
        values[n] = level
        if verbose and (n % max(1, N // 8) == 0):
            print(f"[solve_sl] level {n}/{N}: min={level.min():.6g} max={level.max():.6g}")

    wall = time.perf_counter() - started
    if verbose:
        print(f"[solve_sl] ✔ {problem.name}: N={N} L={g.space.cells} nodes_p={g.simplex.size} in {wall:.2f}s")
    return SolutionField(
        values, g, vertex_mask, config.convexify,
        diagnostics={"scheme": "sl", "clamped_successors": clamped, "wall_time": wall, **config.knobs()},
    )


def value_at(field_: SolutionField, t: float, x: float, p) -> float:
    return field_.value_at(t, x, p)


def one_step_dpp(problem: ProblemSpec, config: SolverConfig, field_: SolutionField, n: int) -> np.ndarray:
    """Right-hand side of the one-step programming identity at level n.

    For each node (l, m): Σ_j λ_j · Ȳ(t_n, x_l, π_j), the expected clamped
    continuation over the belief feedback of p_m. Equals u[n] when the scheme
    is consistent.
    """
    ybar = continuation(problem, config, n, field_.values[n + 1])
    out = np.empty_like(ybar)
    for l in range(ybar.shape[0]):
        env = field_.envelope(n, l) if config.convexify else None
        for m in range(ybar.shape[1]):
            if env is None:
                out[l, m] = ybar[l, m]
                continue
            d = feedback_marginal(env, m)
            out[l, m] = float(d.probabilities @ ybar[l, d.outcomes])
    return out
