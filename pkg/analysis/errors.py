# dynkin/analysis/errors.py
from __future__ import annotations
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
import pandas as pd
from tabulate import tabulate

from mesh.field import SolutionField

COLUMNS = ["delta", "max_error", "max_rate", "rms_error", "rms_rate"]
# relative slack when checking that Δ halves down a table
HALVING_RTOL = 0.02

Reference = Union[SolutionField, np.ndarray, Callable]


def _stride(coarse: int, fine: int) -> Optional[int]:
    return fine // coarse if coarse and fine % coarse == 0 else None


def _nested_view(field: SolutionField, ref: SolutionField) -> Optional[np.ndarray]:
    """Fine-field values at the coarse nodes when the grids nest, else None."""
    a, b = field.grids, ref.grids
    if (a.space.lo, a.space.hi, a.time.horizon) != (b.space.lo, b.space.hi, b.time.horizon):
        return None
    if a.simplex.scenario_count != b.simplex.scenario_count:
        return None
    st = _stride(a.time.steps, b.time.steps)
    sx = _stride(a.space.cells, b.space.cells)
    if st is None or sx is None:
        return None
    if a.simplex.scenario_count == 1:
        return ref.values[::st, ::sx, :]
    if a.simplex.scenario_count == 2:
        sp = _stride(a.simplex.divisions, b.simplex.divisions)
        return None if sp is None else ref.values[::st, ::sx, ::sp]
    return None


def reference_values(field: SolutionField, reference: Reference) -> np.ndarray:
    """Reference evaluated at every node of `field`, shape field.shape."""
    if isinstance(reference, np.ndarray):
        if reference.shape != field.shape:
            raise ValueError(f"reference shape {reference.shape} != field shape {field.shape}")
        return reference
    g = field.grids
    if isinstance(reference, SolutionField):
        view = _nested_view(field, reference)
        if view is not None:
            return view
        out = np.empty(field.shape)
        for n, t in enumerate(g.time.nodes):
            for m, p in enumerate(g.simplex.nodes):
                for l, x in enumerate(g.space.nodes):
                    out[n, l, m] = reference.value_at(t, x, p)
        return out
    t = g.time.nodes[:, None, None]
    x = g.space.nodes[None, :, None]
    p = g.simplex.first_coordinate[None, None, :]
    return np.broadcast_to(np.asarray(reference(t, x, p), dtype=float), field.shape)


def errors_vs(field: SolutionField, reference: Reference) -> tuple[float, float]:
    """(MAX, RMS) of nodal differences over the full space-time-belief grid."""
    diff = field.values - reference_values(field, reference)
    return float(np.max(np.abs(diff))), float(np.sqrt(np.mean(diff ** 2)))


def _rates(errors: np.ndarray) -> np.ndarray:
    rates = np.full(errors.shape, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        prev, cur = errors[:-1], errors[1:]
        r = np.log2(prev / cur)
        r[(prev == cur)] = 0.0
    rates[1:] = r
    return rates


@dataclass
class ConvergenceReport:
    frame: pd.DataFrame
    scheme: str = ""
    axis: str = ""

    def to_markdown(self) -> str:
        df = self.frame.copy()
        fmt = {c: (lambda v: "–" if pd.isna(v) else f"{v:.2f}") for c in ("max_rate", "rms_rate")}
        for c, f in fmt.items():
            df[c] = df[c].map(f)
        for c in ("delta", "max_error", "rms_error"):
            df[c] = df[c].map(lambda v: f"{v:.2e}")
        return tabulate(df.values.tolist(), headers=list(df.columns), tablefmt="github")

    @property
    def rates(self) -> tuple[np.ndarray, np.ndarray]:
        return self.frame["max_rate"].to_numpy()[1:], self.frame["rms_rate"].to_numpy()[1:]


def convergence_table(rows: Sequence[tuple[float, float, float]], scheme: str = "", axis: str = "",
                      rtol: float = HALVING_RTOL) -> ConvergenceReport:
    """Rows of (Δ, MAX, RMS) with Δ halving; rate_k = log2(e_{k−1}/e_k)."""
    if not rows:
        raise ValueError("convergence_table needs at least one row")
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError("rows must be (delta, max_error, rms_error) triples")
    d = arr[:, 0]
    ratio = d[1:] / d[:-1]
    if np.any(np.abs(ratio - 0.5) > 0.5 * rtol):
        raise ValueError(f"delta values must halve down the table, got ratios {np.round(ratio, 4).tolist()}")
    frame = pd.DataFrame({
        "delta": d,
        "max_error": arr[:, 1],
        "max_rate": _rates(arr[:, 1]),
        "rms_error": arr[:, 2],
        "rms_rate": _rates(arr[:, 2]),
    })[COLUMNS]
    return ConvergenceReport(frame, scheme, axis)


def merge_reports(reports: Sequence[ConvergenceReport]) -> pd.DataFrame:
    """Side-by-side frame; columns prefixed by scheme when there are several."""
    if len(reports) == 1:
        return reports[0].frame.copy()
    out = pd.DataFrame({"delta": reports[0].frame["delta"]})
    for r in reports:
        for c in COLUMNS[1:]:
            out[f"{r.scheme}_{c}"] = r.frame[c].to_numpy()
    return out
