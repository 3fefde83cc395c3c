# dynkin/main.py
import argparse
import sys
from typing import Optional, Sequence

from config import AXES, OPTIMIZERS, PRESETS, SCHEMES, ConfigError, load_run_config
from nn.trainers import TrainingError
from pipeline.boundary import run_boundary
from pipeline.run import run_solve
from pipeline.table import run_table
from schemes.solver_sl import SolverError

COMMANDS = {"run": run_solve, "table": run_table, "boundary": run_boundary}
_OVERRIDES = ("preset", "scheme", "n", "l", "m", "optimizer", "hidden", "seed", "out", "tol",
              "p", "axis", "levels", "workers", "clamp", "convexify", "source")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(description="Convexity-constrained double-obstacle solver (SL and NN schemes)")
    ap.add_argument("command", choices=sorted(COMMANDS), help="run: one solve; table: convergence; boundary: active sets")
    ap.add_argument("--config", help="key=value run file; flags override its values")
    ap.add_argument("--preset", choices=PRESETS + ("custom",))
    ap.add_argument("--scheme", choices=SCHEMES)
    ap.add_argument("--n", type=int, help="time steps N")
    ap.add_argument("--l", type=int, help="space cells L")
    ap.add_argument("--m", type=int, help="simplex divisions M")
    ap.add_argument("--optimizer", choices=OPTIMIZERS)
    ap.add_argument("--hidden", type=int, help="hidden width of the regression network")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--tol", type=float, help="active-set tolerance")
    ap.add_argument("--p", type=float, help="belief p for boundary extraction")
    ap.add_argument("--axis", help="refinement axis for table: t | x | p")
    ap.add_argument("--levels", type=int, help="rows of the convergence table")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--clamp", action=argparse.BooleanOptionalAction, default=None)
    ap.add_argument("--convexify", action=argparse.BooleanOptionalAction, default=None)
    ap.add_argument("--source", action=argparse.BooleanOptionalAction, default=None)
    ap.add_argument("--quiet", action="store_true")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 on --help
        return int(e.code or 0)

    overrides = {k: getattr(args, k) for k in _OVERRIDES}
    try:
        cfg = load_run_config(args.config, overrides)
        COMMANDS[args.command](cfg, verbose=not args.quiet)
    except ConfigError as e:
        print(f"[{args.command}] ✗ configuration: {e}", file=sys.stderr)
        return 2
    except (SolverError, TrainingError) as e:
        print(f"[{args.command}] ✗ {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
