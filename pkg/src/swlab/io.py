"""CSV output with fixed numeric formatting and run manifests."""

from __future__ import annotations

import csv
import os
import platform
import threading

import numpy as np
import scipy

from . import __version__, _accel

_WRITE_LOCK = threading.Lock()


def fmt(v) -> str:
    """12 significant digits, always with '.' as decimal point."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.12g" % float(v)
    return str(v)


def write_csv(path, header, rows):
    """Write a header row and then one line per row (iterable of sequences)."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    with _WRITE_LOCK, open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def write_columns(path, columns: dict):
    """Write equal-length arrays as CSV columns."""
    names = list(columns)
    cols = [np.asarray(columns[k]) for k in names]
    n = {len(c) for c in cols}
    if len(n) > 1:
        raise ValueError("columns differ in length")
    write_csv(path, names, zip(*cols))


def read_columns(path) -> dict:
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = list(r)
    out = {}
    for k, name in enumerate(header):
        vals = [row[k] for row in rows]
        try:
            out[name] = np.array([float(v) for v in vals])
        except ValueError:
            out[name] = np.array(vals, dtype=object)
    return out


def versions() -> dict:
    return {"swlab_version": __version__, "numpy_version": np.__version__,
            "scipy_version": scipy.__version__, "python_version": platform.python_version(),
            "backend": _accel.BACKEND}


def manifest_path(out: str) -> str:
    if out.endswith(os.sep) or os.path.isdir(out) or not os.path.splitext(out)[1]:
        return os.path.join(out, "manifest.txt")
    return os.path.splitext(out)[0] + ".manifest.txt"


def write_manifest(out: str, command: str, cfg, resolved: dict | None = None) -> str:
    """Config echo that can be fed back with --config to repeat the run."""
    path = manifest_path(out)
    lines = [f"command = {command}"]
    for k, v in cfg.items():
        lines.append(f"{k} = {fmt(v) if v is not None else 'none'}")
    lines.append("# resolved values and versions (ignored on input)")
    for k, v in (resolved or {}).items():
        lines.append(f"{k} = {fmt(v)}")
    for k, v in versions().items():
        lines.append(f"{k} = {v}")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with _WRITE_LOCK, open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return path
