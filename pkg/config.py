# dynkin/config.py
from __future__ import annotations
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from dotenv import dotenv_values, load_dotenv

# -------------------------------------------------------------------
# 1) Env & constants
# -------------------------------------------------------------------
load_dotenv()

OUTPUT_DIR = Path(os.environ.get("DYNKIN_OUTPUT_DIR", "runs")).resolve()
_raw = dict(
    DYNKIN_SEED=os.environ.get("DYNKIN_SEED", "0"),
    DYNKIN_WORKERS=os.environ.get("DYNKIN_WORKERS", "4"),
    DYNKIN_REFERENCE_STEPS=os.environ.get("DYNKIN_REFERENCE_STEPS", "256"),
    DYNKIN_ACTIVE_TOL=os.environ.get("DYNKIN_ACTIVE_TOL", "2e-5"),
)


def _env_int(v: str, minimum: int) -> Optional[int]:
    try:
        i = int(v)
    except ValueError:
        return None
    return i if i >= minimum else None


def _env_float(v: str) -> Optional[float]:
    try:
        f = float(v)
    except ValueError:
        return None
    return f if f >= 0 else None


# Basic validation (strict, so misconfig surfaces at import)
_parsed = dict(
    DYNKIN_SEED=_env_int(_raw["DYNKIN_SEED"], 0),
    DYNKIN_WORKERS=_env_int(_raw["DYNKIN_WORKERS"], 1),
    DYNKIN_REFERENCE_STEPS=_env_int(_raw["DYNKIN_REFERENCE_STEPS"], 2),
    DYNKIN_ACTIVE_TOL=_env_float(_raw["DYNKIN_ACTIVE_TOL"]),
)
_invalid = [k for k, v in _parsed.items() if v is None]
if _invalid:
    raise RuntimeError(f"Invalid env vars: {', '.join(_invalid)}")

DEFAULT_SEED: int = _parsed["DYNKIN_SEED"]
MAX_WORKERS: int = _parsed["DYNKIN_WORKERS"]
# size of the refined axes in the fine SL reference used where no exact solution exists
REFERENCE_STEPS: int = _parsed["DYNKIN_REFERENCE_STEPS"]
ACTIVE_TOL: float = _parsed["DYNKIN_ACTIVE_TOL"]

PRESETS = ("exp1", "exp2", "exp3")
SCHEMES = ("sl", "nn")
OPTIMIZERS = ("lm", "lbfgs", "br")
AXES = ("t", "x", "p")


class ConfigError(ValueError):
    """Run configuration is unreadable, incomplete or inconsistent (exit code 2)."""


# -------------------------------------------------------------------
# 2) Run configuration (flat key=value files + CLI overrides)
# -------------------------------------------------------------------
@dataclass
class RunConfig:
    preset: Optional[str] = None          # exp1 | exp2 | exp3 | custom
    scheme: str = "sl"
    n: int = 64
    l: int = 64
    m: int = 16
    optimizer: str = "lm"
    hidden: int = 10
    seed: int = DEFAULT_SEED
    out: Path = OUTPUT_DIR
    tol: float = ACTIVE_TOL
    p: float = 0.0
    axis: str = "t"
    levels: Optional[int] = None          # rows of a convergence table; None: preset default
    workers: int = MAX_WORKERS
    clamp: Optional[bool] = None          # None: decided by the problem
    convexify: Optional[bool] = None
    source: Optional[bool] = None
    config_path: Optional[Path] = None
    # inline problem expressions, e.g. {"drift": "0.01", "terminal_1": "x**2"}
    problem: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        if self.preset is None:
            raise ConfigError("missing preset (use --preset or a 'preset=' line)")
        if self.preset not in PRESETS + ("custom",):
            raise ConfigError(f"unknown preset '{self.preset}' (expected one of {', '.join(PRESETS)}, custom)")
        if self.preset == "custom" and not self.problem:
            raise ConfigError("preset 'custom' needs inline problem keys")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme '{self.scheme}'")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer '{self.optimizer}'")
        if self.axis not in AXES:
            raise ConfigError(f"unknown refinement axis '{self.axis}'")
        for k in ("n", "l", "m", "hidden", "workers"):
            if getattr(self, k) < 1:
                raise ConfigError(f"{k} must be >= 1, got {getattr(self, k)}")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"p must lie in [0, 1], got {self.p}")
        if self.tol < 0:
            raise ConfigError(f"tol must be >= 0, got {self.tol}")
        if self.levels is not None and self.levels < 2:
            raise ConfigError(f"levels must be >= 2, got {self.levels}")
        return self

    def knobs(self) -> dict:
        """JSON-ready view for manifests."""
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["out"] = str(self.out)
        out["config_path"] = str(self.config_path) if self.config_path else None
        return out


_PROBLEM_KEYS = {"scenarios", "horizon", "x_lo", "x_hi", "drift", "diffusion", "source_term"}
_PROBLEM_PREFIXES = ("terminal_", "lower_", "upper_")


def _is_problem_key(k: str) -> bool:
    return k in _PROBLEM_KEYS or (k.startswith(_PROBLEM_PREFIXES) and k.rsplit("_", 1)[1].isdigit())


def _to_bool(key: str, v: str) -> bool:
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got '{v}'")


def _coerce(key: str, v):
    if v is None:
        return None
    types = {f.name: f.type for f in fields(RunConfig)}
    kind = types[key]
    try:
        if kind in ("int", "Optional[int]"):
            return int(v)
        if kind == "float":
            return float(v)
        if kind == "Path":
            return Path(v)
        if kind == "Optional[bool]":
            return v if isinstance(v, bool) else _to_bool(key, v)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{key}: malformed value '{v}'") from e
    return str(v)


def load_run_config(path: Optional[Path] = None, overrides: Optional[dict] = None) -> RunConfig:
    """Read a key=value run file (optional) and apply CLI overrides on top.

    Keys not belonging to RunConfig are accepted only when they describe an
    inline problem (scenarios, horizon, x_lo, x_hi, drift, diffusion,
    source_term, terminal_i, lower_i, upper_i).
    """
    values: dict = {}
    problem: dict = {}
    cfg = RunConfig()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = dotenv_values(path)
        except Exception as e:
            raise ConfigError(f"cannot parse {path}: {e}") from e
        names = {f.name for f in fields(RunConfig)} - {"problem", "config_path"}
        for k, v in raw.items():
            k = k.strip().lower()
            if v is None:
                raise ConfigError(f"{path}: line for '{k}' has no value")
            if k in names:
                values[k] = v
            elif _is_problem_key(k):
                problem[k] = v
            else:
                raise ConfigError(f"{path}: unknown key '{k}'")
        cfg = replace(cfg, config_path=path)
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    coerced = {k: _coerce(k, v) for k, v in values.items()}
    if problem and "preset" not in coerced:
        coerced["preset"] = "custom"
    cfg = replace(cfg, problem=problem, **coerced)
    return cfg.validate()


# -------------------------------------------------------------------
# 3) Output layout
# -------------------------------------------------------------------
@dataclass
class RunPaths:
    tag: str
    out_dir: Path = OUTPUT_DIR

    @property
    def root(self) -> Path:
        """<out>/<tag>"""
        p = Path(self.out_dir) / self.tag
        p.mkdir(parents=True, exist_ok=True)
        return p

    @property
    def solution_csv(self) -> Path:
        return self.root / f"{self.tag}.csv"

    @property
    def manifest(self) -> Path:
        return self.root / f"{self.tag}_manifest.json"

    @property
    def residuals_csv(self) -> Path:
        return self.root / f"{self.tag}_residuals.csv"

    @property
    def training_csv(self) -> Path:
        return self.root / f"{self.tag}_training.csv"

    @property
    def convergence_csv(self) -> Path:
        return self.root / f"{self.tag}_convergence.csv"

    @property
    def convergence_md(self) -> Path:
        return self.root / f"{self.tag}_convergence.md"

    @property
    def active_csv(self) -> Path:
        return self.root / f"{self.tag}_active.csv"

    def plot_script(self, kind: str) -> Path:
        return self.root / f"{self.tag}_{kind}.gp"


def paths_for_run(tag: str, out_dir: Optional[Path] = None) -> RunPaths:
    """
    Single entry-point for consumers. Returns a RunPaths that creates dirs lazily.
    """
    return RunPaths(tag, Path(out_dir) if out_dir is not None else OUTPUT_DIR)


__all__ = [
    # env
    "OUTPUT_DIR", "DEFAULT_SEED", "MAX_WORKERS", "REFERENCE_STEPS", "ACTIVE_TOL",
    "PRESETS", "SCHEMES", "OPTIMIZERS", "AXES",
    # run config
    "ConfigError", "RunConfig", "load_run_config",
    # paths
    "RunPaths", "paths_for_run",
]
