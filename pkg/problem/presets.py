# dynkin/problem/presets.py
from __future__ import annotations

import numpy as np

from problem.spec import ProblemSpec

_3PI = 3.0 * np.pi

# Experiment-3 penalties, one per scenario
PUT_PENALTIES = (0.125, 0.065)
PUT_VOLATILITY = 0.2
PUT_RATE = 0.03


def _exp1_diffusion(t, x):
    x = np.asarray(x, dtype=float)
    return 0.2 * x * (1.0 - x)


def _exp1_exact(t, x, p=None):
    return np.cos(_3PI * np.asarray(t)) * np.cos(_3PI * np.asarray(x))


def _exp1_source(t, x, P):
    a = _exp1_diffusion(t, x)
    h = (_3PI * np.sin(_3PI * t) * np.cos(_3PI * x)
         + 0.5 * (_3PI * a) ** 2 * np.cos(_3PI * t) * np.cos(_3PI * x))
    return np.repeat(h[:, None], np.asarray(P).shape[0], axis=1)


def preset_experiment1() -> ProblemSpec:
    """Linear problem with a manufactured solution cos(3πt)cos(3πx); one scenario."""
    return ProblemSpec(
        name="exp1",
        horizon=1.0,
        scenario_count=1,
        drift=lambda t, x: np.zeros_like(np.asarray(x, dtype=float)),
        diffusion=_exp1_diffusion,
        # forced by the exact solution at t = T: cos(3π)·cos(3πx)
        terminal=lambda x: (np.cos(_3PI) * np.cos(_3PI * np.asarray(x)))[:, None],
        domain=(0.0, 1.0),
        source=_exp1_source,
        exact=_exp1_exact,
    )


def _exp2_source(t, x, P):
    p = np.asarray(P)[:, 0]
    return np.sin(np.pi * t) * np.cos(np.pi * np.asarray(x))[:, None] * np.sin(_3PI * p)[None, :]


def preset_experiment2() -> ProblemSpec:
    """Two scenarios, zero terminal data, p-dependent source; only the convexity constraint binds."""
    return ProblemSpec(
        name="exp2",
        horizon=1.0,
        scenario_count=2,
        drift=lambda t, x: np.zeros_like(np.asarray(x, dtype=float)),
        diffusion=lambda t, x: np.asarray(x, dtype=float) * (1.0 - np.asarray(x, dtype=float)),
        terminal=lambda x: np.zeros((np.shape(x)[0], 2)),
        domain=(0.0, 1.0),
        source=_exp2_source,
    )


def put_payoff(x) -> np.ndarray:
    """max(2 − eˣ, 0), strike 2."""
    return np.maximum(2.0 - np.exp(np.asarray(x, dtype=float)), 0.0)


def _put_columns(x) -> np.ndarray:
    g = put_payoff(x)
    return np.stack([g, g], axis=-1)


def preset_experiment3() -> ProblemSpec:
    """Cancellable put with scenario-dependent cancellation penalty (log-price x)."""
    delta = np.asarray(PUT_PENALTIES)
    drift = PUT_RATE - 0.5 * PUT_VOLATILITY ** 2
    return ProblemSpec(
        name="exp3",
        horizon=1.0,
        scenario_count=2,
        drift=lambda t, x: np.full_like(np.asarray(x, dtype=float), drift),
        diffusion=lambda t, x: np.full_like(np.asarray(x, dtype=float), PUT_VOLATILITY),
        terminal=_put_columns,
        domain=(0.0, 1.0),
        lower_obstacle=lambda t, x: _put_columns(x),
        upper_obstacle=lambda t, x: _put_columns(x) + delta,
        metadata={"penalties": list(PUT_PENALTIES), "rate": PUT_RATE, "volatility": PUT_VOLATILITY},
    )


PRESETS = {
    "exp1": preset_experiment1,
    "exp2": preset_experiment2,
    "exp3": preset_experiment3,
}


def get_preset(name: str) -> ProblemSpec:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown preset '{name}' (expected one of {', '.join(PRESETS)})") from None
