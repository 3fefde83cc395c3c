# dynkin/problem/inline.py
# Custom problems written as numexpr expressions in t, x, p1..pI.
from __future__ import annotations

import numexpr as ne
import numpy as np

from problem.spec import ProblemSpec


def _compile(expr: str, key: str, scenarios: int = 0):
    """Trial-evaluate `expr` in t, x and, when `scenarios` > 0, p1..p<scenarios>."""
    trial = {"t": 0.0, "x": np.zeros(1), **{f"p{i}": np.zeros(1) for i in range(1, scenarios + 1)}}
    try:
        ne.evaluate(expr, local_dict=trial)
    except Exception as e:
        raise ValueError(f"{key}: invalid expression '{expr}': {e}") from e
    return expr


def _eval(expr: str, **env) -> np.ndarray:
    return np.asarray(ne.evaluate(expr, local_dict=env), dtype=float)


def _vector_payoff(exprs: list[str]):
    def fn(t, x):
        x = np.asarray(x, dtype=float)
        return np.stack([np.broadcast_to(_eval(e, t=float(t), x=x), x.shape) for e in exprs], axis=-1)
    return fn


def problem_from_mapping(data: dict) -> ProblemSpec:
    """Build a ProblemSpec from string keys (see load_run_config).

    Required: scenarios, terminal_1..terminal_I. Obstacles are all-or-nothing
    per side: lower_1..lower_I, upper_1..upper_I.
    """
    try:
        I = int(data.get("scenarios", "1"))
        horizon = float(data.get("horizon", "1"))
        lo, hi = float(data.get("x_lo", "0")), float(data.get("x_hi", "1"))
    except ValueError as e:
        raise ValueError(f"inline problem: malformed number ({e})") from e
    if I < 1:
        raise ValueError(f"inline problem: scenarios must be >= 1, got {I}")

    def _side(prefix: str, required: bool):
        keys = [f"{prefix}_{i}" for i in range(1, I + 1)]
        present = [k for k in keys if k in data]
        if not present and not required:
            return None
        missing = sorted(set(keys) - set(present))
        if missing:
            raise ValueError(f"inline problem: missing {', '.join(missing)}")
        return [_compile(data[k], k) for k in keys]

    terminal = _side("terminal", required=True)
    lower = _side("lower", required=False)
    upper = _side("upper", required=False)
    drift = _compile(data.get("drift", "0"), "drift")
    diffusion = _compile(data.get("diffusion", "0"), "diffusion")
    source = data.get("source_term")
    if source is not None:
        source = _compile(source, "source_term", I)

    def _coef(expr):
        def fn(t, x):
            x = np.asarray(x, dtype=float)
            return np.broadcast_to(_eval(expr, t=float(t), x=x), x.shape).copy()
        return fn

    def _source(t, x, P):
        P = np.asarray(P, dtype=float)
        env = {f"p{i + 1}": P[None, :, i] for i in range(I)}
        x = np.asarray(x, dtype=float)
        out = _eval(source, t=float(t), x=x[:, None], **env)
        return np.broadcast_to(out, (x.shape[0], P.shape[0]))

    term = _vector_payoff(terminal)
    return ProblemSpec(
        name="custom",
        horizon=horizon,
        scenario_count=I,
        drift=_coef(drift),
        diffusion=_coef(diffusion),
        terminal=lambda x: term(horizon, x),
        domain=(lo, hi),
        lower_obstacle=_vector_payoff(lower) if lower else None,
        upper_obstacle=_vector_payoff(upper) if upper else None,
        source=_source if source is not None else None,
        metadata={"expressions": dict(data)},
    )
