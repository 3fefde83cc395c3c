# dynkin/schemes/stepper.py
from __future__ import annotations
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import hermite_e

from mesh.grids import SpaceGrid
from mesh.interpolation import count_outside, interp_x


@dataclass(frozen=True, eq=False)
class ShockSet:
    values: np.ndarray
    probabilities: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        v, w = np.asarray(self.values, dtype=float), np.asarray(self.probabilities, dtype=float)
        if v.shape != w.shape or v.ndim != 1 or v.size == 0:
            raise ValueError("shock values and probabilities must be equal-length vectors")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("shock probabilities must be nonnegative and sum to 1")
        if abs(w @ v) > 1e-12 or abs(w @ v**2 - 1.0) > 1e-10:
            raise ValueError("shocks must have zero mean and unit variance")

    @classmethod
    def two_point(cls) -> "ShockSet":
        return cls(np.array([1.0, -1.0]), np.array([0.5, 0.5]), "two_point")

    @classmethod
    def gauss_hermite(cls, k: int) -> "ShockSet":
        """k-point quadrature of the standard normal law."""
        if k < 2:
            raise ValueError(f"gauss_hermite needs k >= 2, got {k}")
        x, w = hermite_e.hermegauss(k)
        w = w / w.sum()
        # symmetric nodes: remove rounding drift from the mean
        x = 0.5 * (x - x[::-1])
        return cls(x, w, f"gauss_hermite_{k}")


@dataclass(frozen=True, eq=False)
class EulerStep:
    t: float
    dt: float
    drift: np.ndarray        # b(t_n, x_l)
    diffusion: np.ndarray    # a(t_n, x_l)
    shocks: ShockSet

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")

    @classmethod
    def from_problem(cls, problem, t: float, dt: float, x: np.ndarray, shocks: ShockSet | None = None) -> "EulerStep":
        x = np.asarray(x, dtype=float)
        return cls(
            t, dt,
            np.broadcast_to(np.asarray(problem.drift(t, x), dtype=float), x.shape),
            np.broadcast_to(np.asarray(problem.diffusion(t, x), dtype=float), x.shape),
            shocks or ShockSet.two_point(),
        )


def successors(step: EulerStep, x) -> tuple[np.ndarray, np.ndarray]:
    """Foot points x + b·dt + a·√dt·ξ_k, shaped (K,) + x.shape, and their probabilities."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("successors: non-finite x")
    xi = step.shocks.values.reshape((-1,) + (1,) * x.ndim)
    nxt = x + step.drift * step.dt + step.diffusion * np.sqrt(step.dt) * xi
    return nxt, step.shocks.probabilities


def expected_value(step: EulerStep, x, values: np.ndarray, grid: SpaceGrid) -> np.ndarray:
    """Σ_k p_k · interp_x(values, x_next_k); exact enumeration over the shocks.

    `values` is (L+1,) or (L+1, M); the result is x.shape + values.shape[1:].
    """
    nxt, prob = successors(step, x)
    interp = interp_x(values, nxt, grid)
    return np.tensordot(prob, interp, axes=(0, 0))


def count_clamped(step: EulerStep, x, grid: SpaceGrid) -> int:
    """Foot points that fall outside the spatial domain (and get clamped)."""
    nxt, _ = successors(step, x)
    return count_outside(nxt, grid)
