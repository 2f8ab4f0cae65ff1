"""CSV ingestion, preprocessing and result files."""
import csv
import json
import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np


@dataclass
class TimeSeries:
    """``values`` is ``(p, n)``; column ``t`` is the sample at time ``t``."""

    values: np.ndarray
    names: list = field(default_factory=list)

    @property
    def p(self):
        return self.values.shape[0]

    @property
    def n(self):
        return self.values.shape[1]


def _even(values, label):
    n = values.shape[1]
    if n % 2:
        warnings.warn(f"{label}: odd sample count {n}; dropping the last sample", stacklevel=3)
        values = values[:, :-1]
    return values


def load_timeseries(path, transpose=False, header=False):
    """Read a comma-separated file with rows = time and columns = variables.

    ``transpose=True`` reads rows as variables instead. With ``header=True``
    the first row is taken as variable names (rows = time) or skipped.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    names = []
    if header:
        if not rows:
            raise ValueError(f"{path}: empty file")
        names = [c.strip() for c in rows[0]]
        rows = rows[1:]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = len(rows[0])
    data = np.empty((len(rows), width))
    offset = 2 if header else 1
    for r, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(
                f"{path}: row {r + offset} has {len(row)} columns, expected {width}"
            )
        for c, cell in enumerate(row):
            try:
                data[r, c] = float(cell)
            except ValueError:
                raise ValueError(
                    f"{path}: non-numeric value {cell!r} at row {r + offset}, column {c + 1}"
                ) from None
            if not math.isfinite(data[r, c]):
                raise ValueError(f"{path}: non-finite value at row {r + offset}, column {c + 1}")
    values = data if transpose else data.T
    if values.shape[0] < 2:
        raise ValueError(f"{path}: need at least 2 variables, got {values.shape[0]}")
    if not transpose and names and len(names) != values.shape[0]:
        raise ValueError(f"{path}: header has {len(names)} names for {values.shape[0]} columns")
    if transpose:
        names = []
    return TimeSeries(np.ascontiguousarray(_even(values, str(path))), names)


def align_pair(x, y):
    """Truncate a pair of series to their common (even) length."""
    if x.p != y.p:
        raise ValueError(f"x has {x.p} variables but y has {y.p}")
    n = min(x.n, y.n)
    if x.n != y.n:
        warnings.warn(f"sample counts differ ({x.n} vs {y.n}); truncating both to {n}", stacklevel=2)
    return TimeSeries(x.values[:, :n], x.names), TimeSeries(y.values[:, :n], y.names)


def preprocess(series, log_return=False, center=False, standardize=False):
    """Optional log-returns, then per-variable centering and scaling."""
    values = np.asarray(series.values, dtype=float)
    if log_return:
        bad = np.argwhere(values <= 0)
        if bad.size:
            var, t = bad[0]
            raise ValueError(f"log-returns need positive values; variable {var}, t={t} is {values[var, t]}")
        values = np.diff(np.log(values), axis=1)
        values = _even(values, "log-returns")
    if center:
        values = values - values.mean(axis=1, keepdims=True)
    if standardize:
        sd = values.std(axis=1, keepdims=True)
        zero = np.flatnonzero(sd[:, 0] == 0)
        if zero.size:
            raise ValueError(f"variable {zero[0]} has zero variance; cannot standardize")
        values = values / sd
    return TimeSeries(np.ascontiguousarray(values), list(series.names))


# ---- output


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def dumps(obj, indent=2, _level=0):
    """JSON with floats written to 17 significant digits and keys in insertion order."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, (bool, np.bool_, int, float, np.integer, np.floating)):
        return _fmt(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {dumps(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        if not seq:
            return "[]"
        items = [pad + dumps(v, indent, _level + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj) + "\n")


def edges_payload(est, lam=None):
    p = est.p
    edges = [
        {"i": int(i), "j": int(j), "weight": float(est.group_norms[i, j])}
        for i, j in sorted(est.edges)
    ]
    pen = est.penalty
    return {
        "edges": edges,
        "p": p,
        "M": est.M,
        "K": est.K,
        "penalty": None if pen is None else pen.kind,
        "lambda": lam if lam is not None else (None if pen is None else pen.lam),
        "converged": bool(est.converged),
    }


def load_edges(path):
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return {(e["i"], e["j"]) for e in payload["edges"]}


def write_delta_csv(matrix, path):
    """``p`` rows of ``Re, Im`` pairs for each column."""
    matrix = np.asarray(matrix)
    inter = np.empty((matrix.shape[0], 2 * matrix.shape[1]))
    inter[:, 0::2] = matrix.real
    inter[:, 1::2] = matrix.imag
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for row in inter:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def write_series_csv(values, path, names=None):
    """``(p, n)`` array written with rows = time."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if names:
            fh.write(",".join(names) + "\n")
        for row in np.asarray(values).T:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def emit_results(est, out_dir, metrics=None, config=None, lam=None, dump_delta=False):
    """Write ``edges.json`` and optionally ``metrics.json``, ``config.json``
    and one ``delta_k<k>.csv`` per frequency. Returns the written paths."""
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
    written = []
    path = os.path.join(out_dir, "edges.json")
    write_json(edges_payload(est, lam), path)
    written.append(path)
    if metrics is not None:
        path = os.path.join(out_dir, "metrics.json")
        write_json(metrics, path)
        written.append(path)
    if config is not None:
        path = os.path.join(out_dir, "config.json")
        write_json(config, path)
        written.append(path)
    if dump_delta:
        for k in range(est.M):
            path = os.path.join(out_dir, f"delta_k{k}.csv")
            write_delta_csv(est.delta[k], path)
            written.append(path)
    return written
