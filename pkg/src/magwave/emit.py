"""Deterministic CSV, JSON and gnuplot output.

Floats are written with ``repr`` (shortest round-trip form) and JSON keys
are sorted, so identical results give byte-identical files.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

# file stem -> fixed column order; documented in SCHEMAS.md
SCHEMAS = {
    "eigen": ("index", "eigenvalue", "residual"),
    "scan": ("alpha", "lambda_star", "lambda_0_cert", "exists_margin"),
    "certificate": ("name", "value"),
    "hardy": ("quantity", "value"),
    "trial": ("lambda", "norm_sq", "norm_sq_formula", "grad_quotient", "expansion_half",
              "expansion_full", "magnetic_quotient"),
    "bgrs": ("lambda", "theta_min", "threshold", "binding", "coefficient"),
    "curve": ("x", "a", "b", "theta"),
    "ess": ("L", "theta_min", "deficit"),
    "diamagnetic": ("trial", "violation"),
}


def plain(obj):
    """Convert numpy scalars, arrays and tuples into JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [plain(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def dumps(obj) -> str:
    return json.dumps(plain(obj), sort_keys=True, indent=2) + "\n"


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_csv(directory, stem: str, rows) -> Path:
    path = Path(directory) / f"{stem}.csv"
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SCHEMAS[stem])
            for row in rows:
                if len(row) != len(SCHEMAS[stem]):
                    raise ValueError(f"{path}: row has {len(row)} fields, schema has {len(SCHEMAS[stem])}")
                w.writerow([_cell(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def write_json(directory, stem: str, record) -> Path:
    path = Path(directory) / f"{stem}.json"
    try:
        path.write_text(dumps(record))
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


_GP = {
    "scan": ("log alpha", "log lambda*", "set logscale xy\n",
             "plot '{csv}' using 1:2 with linespoints title 'lambda*', "
             "'{csv}' using 1:3 with lines title 'lambda_0 (certificate)'"),
    "bgrs": ("lambda", "binding / lambda^2", "",
             "plot '{csv}' using 1:5 with linespoints title 'c(lambda)'"),
    "curve": ("a", "b", "set size ratio -1\n", "plot '{csv}' using 2:3 with lines title 'curve'"),
    "ess": ("L", "theta_min", "", "plot '{csv}' using 1:2 with linespoints title 'theta_min'"),
    "trial": ("lambda", "quotient", "",
              "plot '{csv}' using 1:4 with points title 'quadrature', "
              "'{csv}' using 1:6 with lines title '1 - s^2 beta^2 lambda^2'"),
    "eigen": ("index", "eigenvalue", "", "plot '{csv}' using 1:2 with points title 'eigenvalues'"),
}


def write_gp(directory, stem: str) -> Path | None:
    """Gnuplot script reading ``<stem>.csv`` by relative path."""
    if stem not in _GP:
        return None
    xl, yl, extra, plot = _GP[stem]
    csv_name = f"{stem}.csv"
    text = (f"set datafile separator ','\nset key autotitle columnhead\n"
            f"set xlabel '{xl}'\nset ylabel '{yl}'\n{extra}"
            f"set terminal pngcairo size 800,600\nset output '{stem}.png'\n"
            + plot.format(csv=csv_name) + "\n")
    path = Path(directory) / f"{stem}.gp"
    path.write_text(text)
    return path


def emit(directory, stem: str, rows=None, record=None, formats=("csv", "json")) -> list[Path]:
    """Write the requested formats for one result."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    if "csv" in formats and rows is not None:
        out.append(write_csv(directory, stem, rows))
    if "json" in formats and record is not None:
        out.append(write_json(directory, stem, record))
    if "gp" in formats and rows is not None:
        p = write_gp(directory, stem)
        if p is not None:
            out.append(p)
    return out
