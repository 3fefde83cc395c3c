# dynkin/utils/io.py
from __future__ import annotations
import json
import os
import tempfile
from pathlib import Path

import pandas as pd

# 17 significant digits round-trip every float64 exactly
FLOAT_FORMAT = "%.17g"


def _replace_atomically(path: Path, write) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            write(f)
        os.replace(tmp, path)
    except Exception:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_json_utf8(path: Path, obj, pretty: bool = True) -> None:
    def _dump(f):
        if pretty:
            json.dump(obj, f, ensure_ascii=False, indent=2, sort_keys=True)
        else:
            json.dump(obj, f, ensure_ascii=False, sort_keys=True)
        f.write("\n")
    _replace_atomically(path, _dump)


def write_text_utf8(path: Path, text: str) -> None:
    _replace_atomically(path, lambda f: f.write(text))


def write_csv_atomic(path: Path, frame: pd.DataFrame) -> None:
    """Write `frame` without index; floats keep full precision."""
    _replace_atomically(
        path, lambda f: frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    )
