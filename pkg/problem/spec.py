# dynkin/problem/spec.py
from __future__ import annotations
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

# (t, x) -> array shaped like x
Coefficient = Callable[[float, np.ndarray], np.ndarray]
# (t, x) -> array of shape x.shape + (I,)
Payoff = Callable[[float, np.ndarray], np.ndarray]
# (t, x, P) with x of shape (K,), P of shape (M, I) -> array (K, M)
Source = Callable[[float, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ProblemSpec:
    """Data of the convexity-constrained double-obstacle problem.

    Payoff callables are vectorized in x and return one column per scenario.
    Missing obstacles mean the corresponding side is unconstrained.
    """
    name: str
    horizon: float
    scenario_count: int
    drift: Coefficient
    diffusion: Coefficient
    terminal: Callable[[np.ndarray], np.ndarray]
    domain: tuple[float, float]
    lower_obstacle: Optional[Payoff] = None
    upper_obstacle: Optional[Payoff] = None
    source: Optional[Source] = None
    # exact(t, x, p) on broadcastable arrays; p is the first barycentric coordinate
    exact: Optional[Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError(f"horizon must be > 0, got {self.horizon}")
        if self.scenario_count < 1:
            raise ValueError(f"scenario_count must be >= 1, got {self.scenario_count}")
        lo, hi = self.domain
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ValueError(f"domain must be a finite interval, got {self.domain}")

    @property
    def has_obstacles(self) -> bool:
        return self.lower_obstacle is not None or self.upper_obstacle is not None

    def _payoff(self, fn, x: np.ndarray) -> np.ndarray:
        vals = np.asarray(fn(x), dtype=float)
        vals = np.broadcast_to(vals, np.shape(x) + (self.scenario_count,))
        return vals

    def terminal_values(self, x: np.ndarray, P: np.ndarray) -> np.ndarray:
        """p_m · g(x_l) as an array (L+1, M)."""
        return self._payoff(self.terminal, np.asarray(x, dtype=float)) @ np.asarray(P).T

    def obstacle_bounds(self, t: float, x: np.ndarray, P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(p_m · f(t, x_l), p_m · h(t, x_l)) as two (L+1, M) arrays, ±inf when absent."""
        x = np.asarray(x, dtype=float)
        shape = (x.shape[0], np.asarray(P).shape[0])
        if self.lower_obstacle is None:
            lower = np.full(shape, -np.inf)
        else:
            lower = self._payoff(lambda s: self.lower_obstacle(t, s), x) @ np.asarray(P).T
        if self.upper_obstacle is None:
            upper = np.full(shape, np.inf)
        else:
            upper = self._payoff(lambda s: self.upper_obstacle(t, s), x) @ np.asarray(P).T
        return lower, upper

    def source_values(self, t: float, x: np.ndarray, P: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        shape = (x.shape[0], np.asarray(P).shape[0])
        if self.source is None:
            return np.zeros(shape)
        return np.broadcast_to(np.asarray(self.source(t, x, np.asarray(P)), dtype=float), shape)


def check_compatibility(problem: ProblemSpec, x: np.ndarray, P: np.ndarray, atol: float = 1e-12) -> bool:
    """p·f(T,x) <= p·g(x) <= p·h(T,x) at every (x, p) pair given."""
    g = problem.terminal_values(x, P)
    lower, upper = problem.obstacle_bounds(problem.horizon, x, P)
    return bool(np.all(lower <= g + atol) and np.all(g <= upper + atol))
