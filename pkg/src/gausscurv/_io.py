"""Atomic CSV/JSON emission with full round-trip precision."""

import json
import os
import tempfile

import numpy as np


def _atomic_write(path, text):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(x):
    """17 significant digits: enough for an exact float64 round trip."""
    return format(float(x), ".17g")


def write_csv(path, header, columns):
    cols = [np.asarray(c).ravel() for c in columns]
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(fmt(v) if not isinstance(v, (int, np.integer)) else str(v)
                              for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def read_csv(path):
    """Return (header, 2D float array)."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if np.isnan(x):
            return "nan"
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def write_json(path, payload):
    _atomic_write(path, json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def dumps_json(payload):
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True)
