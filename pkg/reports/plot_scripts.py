# dynkin/reports/plot_scripts.py
# gnuplot scripts referencing the emitted CSVs; nothing is rendered here.
from __future__ import annotations
from pathlib import Path

from utils.io import write_text_utf8

_HEADER = """set datafile separator ','
set key autotitle columnhead
set terminal pngcairo size 900,650
"""


def surface_script(csv_path: Path, png: str, p: float, title: str) -> str:
    return _HEADER + f"""set output '{png}'
set title '{title}'
set xlabel 't'; set ylabel 'x'; set zlabel 'u'
set hidden3d
splot '{Path(csv_path).name}' using 1:($3=={p!r} ? $2 : 1/0):4 with points pt 7 ps 0.3 notitle
"""


def active_set_script(csv_path: Path, png: str, title: str) -> str:
    name = Path(csv_path).name
    return _HEADER + f"""set output '{png}'
set title '{title}'
set xlabel 't'; set ylabel 'x'
plot '{name}' using 1:(strcol(3) eq 'lower' ? $2 : 1/0) with points pt 5 ps 0.4 lc rgb 'red' title 'lower', \\
     '{name}' using 1:(strcol(3) eq 'upper' ? $2 : 1/0) with points pt 5 ps 0.4 lc rgb 'blue' title 'upper', \\
     '{name}' using 1:(strcol(3) eq 'waiting' ? $2 : 1/0) with points pt 5 ps 0.4 lc rgb 'gray' title 'waiting'
"""


def convergence_script(csv_path: Path, png: str, error_columns: list[int], title: str) -> str:
    name = Path(csv_path).name
    plots = ", ".join(f"'{name}' using 1:{c} with linespoints" for c in error_columns)
    return _HEADER + f"""set output '{png}'
set title '{title}'
set logscale xy
set xlabel 'delta'; set ylabel 'error'
plot {plots}, x title 'slope 1' dashtype 2
"""


def snapshot_script(csv_path: Path, png: str, title: str) -> str:
    name = Path(csv_path).name
    return _HEADER + f"""set output '{png}'
set title '{title}'
set xlabel 'x'
plot '{name}' using 1:2 with lines lw 2, '' using 1:3 with lines dashtype 2, '' using 1:4 with lines dashtype 3
"""


def write_script(path: Path, text: str) -> None:
    write_text_utf8(path, text)
