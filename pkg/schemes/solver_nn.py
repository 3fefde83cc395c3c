# dynkin/schemes/solver_nn.py
from __future__ import annotations
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

import numpy as np
import pandas as pd

from mesh.field import SolutionField
from mesh.grids import SpaceGrid
from mesh.interpolation import interp_x
from nn.network import FeedforwardNet, forward, init_network
from nn.trainers import TrainConfig, TrainingError, TrainReport, fit
from problem.spec import ProblemSpec
from schemes.solver_sl import SolverConfig, check_coefficients, check_finite, convexify_level, source_and_clamp
from schemes.stepper import EulerStep, successors
from utils.seeds import derive_seed

Predictor = Callable[[np.ndarray], np.ndarray]


class Regressor(Protocol):
    """Fits one value slice u(t_{n+1}, ·, p_m) on the x grid."""

    def __call__(self, x: np.ndarray, y: np.ndarray, warm: Optional[object], seed: int
                 ) -> tuple[Predictor, object, Optional[TrainReport]]:
        """Return (predictor, state for warm-starting the next level, report)."""
        ...


@dataclass
class NetworkRegressor:
    """One-hidden-layer tanh network trained by `fit`; warm-started from the previous level."""
    train: TrainConfig = field(default_factory=TrainConfig)
    hidden: int = 10

    def __call__(self, x, y, warm, seed):
        net = warm if isinstance(warm, FeedforwardNet) else init_network(
            [1, self.hidden, 1], rng=np.random.default_rng(seed))
        trained, report = fit(net, x, y, self.train)
        return (lambda z, _net=trained: forward(_net, np.ravel(z)).reshape(np.shape(z))), trained, report


@dataclass
class InterpolantRegressor:
    """Exact piecewise-linear interpolant of the slice (regression-free reference)."""
    grid: SpaceGrid

    def __call__(self, x, y, warm, seed):
        slice_ = np.array(y, dtype=float)
        return (lambda z: interp_x(slice_, z, self.grid)), None, None


@dataclass
class NNSolverConfig:
    solver: SolverConfig
    train: TrainConfig = field(default_factory=TrainConfig)
    hidden: int = 10
    seed: int = 0
    workers: int = 1
    regressor: Optional[Regressor] = None

    def make_regressor(self) -> Regressor:
        return self.regressor or NetworkRegressor(self.train, self.hidden)

    def knobs(self) -> dict:
        out = {**self.solver.knobs(), "hidden": self.hidden, "seed": self.seed,
               "train": self.train.knobs(), "warm_start": True,
               "init": "uniform(+-1/sqrt(fan_in))", "seed_mix": "splitmix64(seed, n, m)"}
        if self.regressor is not None:
            out["regressor"] = type(self.regressor).__name__
        return out


@dataclass
class ResidualTrace:
    """ε^n for n = 0..N-1: the fit error on level n+1 data used to build level n."""
    eps: np.ndarray
    reports: dict = field(default_factory=dict)       # (n, m) -> TrainReport
    predictors: dict = field(default_factory=dict)    # (n, m) -> Predictor

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"n": np.arange(len(self.eps)), "eps": self.eps})

    def training_frame(self) -> pd.DataFrame:
        rows = [
            {"n": n, "m": m, "iters": r.iterations, "mse": r.mse, "max_residual": r.max_residual}
            for (n, m), r in sorted(self.reports.items())
        ]
        return pd.DataFrame(rows, columns=["n", "m", "iters", "mse", "max_residual"])

    @property
    def total(self) -> float:
        return float(np.sum(self.eps))


def _fit_row(regressor: Regressor, x: np.ndarray, upper: np.ndarray, n: int,
             warm: dict, seed: int, workers: int) -> dict:
    """Fit every p-node of one level; returns m -> (predictor, state, report)."""
    M = upper.shape[1]

    def _one(m: int):
        return regressor(x, upper[:, m], warm.get(m), derive_seed(seed, n, m))

    results: dict[int, tuple] = {}
    if workers > 1 and M > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            futures = {ex.submit(_one, m): m for m in range(M)}
            for fut in as_completed(futures):
                m = futures[fut]
                try:
                    results[m] = fut.result()
                except TrainingError as e:
                    raise e.located(n, m) from e
    else:
        for m in range(M):
            try:
                results[m] = _one(m)
            except TrainingError as e:
                raise e.located(n, m) from e
    return results


def solve_nn(problem: ProblemSpec, config: NNSolverConfig, verbose: bool = False
             ) -> tuple[SolutionField, ResidualTrace]:
    """Fully-discrete scheme: per level and p-node, regress the next level in x,
    take the expectation through the fitted function at the exact foot points,
    then source, clamp and envelope as in the SL scheme.
    """
    sc = config.solver
    sc.check(problem)
    g = sc.grids
    N = g.time.steps
    x, P = g.space.nodes, g.simplex.nodes
    values = np.empty(g.shape)
    vertex_mask = np.ones(g.shape, dtype=bool) if sc.convexify else None
    eps = np.zeros(N)
    trace = ResidualTrace(eps)
    regressor = config.make_regressor()
    warm: dict = {}
    started = time.perf_counter()

    values[N] = problem.terminal_values(x, P)
    check_finite(values[N], N, "terminal data")
    for n in range(N - 1, -1, -1):
        upper = values[n + 1]
        fitted = _fit_row(regressor, x, upper, n, warm, config.seed, config.workers)
        step = EulerStep.from_problem(problem, g.time.nodes[n], g.time.dt, x, sc.shocks)
        check_coefficients(step, n)
        nxt, prob = successors(step, x)
        y = np.empty_like(upper)
        for m in range(upper.shape[1]):
            predictor, state, report = fitted[m]
            warm[m] = state
            trace.predictors[(n, m)] = predictor
            if report is not None:
                trace.reports[(n, m)] = report
            y[:, m] = np.tensordot(prob, predictor(nxt), axes=(0, 0))
            eps[n] = max(eps[n], float(np.max(np.abs(predictor(x) - upper[:, m]))))
        level = source_and_clamp(problem, sc, n, y)
        check_finite(level, n, "after network expectation/clamp")
        if sc.convexify:
            level, vertex_mask[n] = convexify_level(g, level, sc.workers)
        values[n] = level
        if verbose:
            print(f"[solve_nn] level {n}/{N}: eps={eps[n]:.3e}")

    wall = time.perf_counter() - started
    if verbose:
        print(f"[solve_nn] ✔ {problem.name}: N={N} L={g.space.cells} nodes_p={g.simplex.size} "
              f"sum eps={eps.sum():.3e} in {wall:.2f}s")
    field_ = SolutionField(
        values, g, vertex_mask, sc.convexify,
        diagnostics={"scheme": "nn", "wall_time": wall, **config.knobs()},
    )
    return field_, trace


def residual_audit(field_: SolutionField, trace: ResidualTrace) -> np.ndarray:
    """Recompute ε^n from the stored predictors and the field."""
    x = field_.grids.space.nodes
    N = field_.grids.time.steps
    out = np.zeros(N)
    for (n, m), predictor in trace.predictors.items():
        out[n] = max(out[n], float(np.max(np.abs(predictor(x) - field_.values[n + 1, :, m]))))
    return out
