import csv
import json
import math
import os

import numpy as np

from .errors import DimensionError, InputError


def matrix_to_json(matrix):
    "Returns the row-major {rows, cols, data: [[re, im], ...]} representation."
    matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
    rows, cols = matrix.shape
    data = [[float(z.real), float(z.imag)] for z in matrix.reshape(-1)]
    return {"rows": rows, "cols": cols, "data": data}


def matrix_from_json(obj):
    "Inverse of matrix_to_json; validates the declared shape."
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
        values = [complex(float(re), float(im)) for re, im in data]
    except (KeyError, TypeError, ValueError) as e:
        raise InputError("Malformed matrix JSON: {}".format(e))
    if len(values) != rows * cols:
        raise DimensionError(
            "Matrix JSON declares {}x{} but holds {} entries".format(
                rows, cols, len(values)
            )
        )
    return np.array(values, dtype=complex).reshape(rows, cols)


def complex_list(values):
    return [[float(complex(z).real), float(complex(z).imag)] for z in values]


def complex_array(pairs):
    try:
        values = [complex(float(re), float(im)) for re, im in pairs]
        return np.array(values, dtype=complex)
    except (TypeError, ValueError) as e:
        raise InputError("Malformed complex list: {}".format(e))


def format_float(x):
    "17 significant digits: round-trip exact for doubles."
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("Non-finite value cannot be serialized: {}".format(x))
    return format(x, ".17g")


def dumps(obj, indent=0):
    """
    Deterministic JSON text with every float written to 17 significant digits.
    Keys keep insertion order so identical inputs give byte-identical files.
    """
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            "{}{}: {}".format(pad, json.dumps(str(k)), dumps(v, indent + 1))
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(dumps(v, indent + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if obj is None or isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError("Bad type for JSON output: " + str(type(obj)))


def write_json(path, obj):
    "Writes obj to path via dumps, creating parent directories."
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w") as handle:
        handle.write(dumps(obj))
        handle.write("\n")


def read_json(path):
    try:
        with open(path) as handle:
            return json.load(handle)
    except OSError as e:
        raise InputError("Cannot read {}: {}".format(path, e))
    except ValueError as e:
        raise InputError("Cannot parse {}: {}".format(path, e))


def write_series_csv(path, times, values):
    "Writes a two-column time series with header t,value."
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["t", "value"])
        for t, v in zip(times, values):
            writer.writerow([format_float(t), format_float(v)])


def trace_fidelity(target, actual):
    "|tr(U^dagger V)| / K: insensitive to a global phase only."
    target = np.asarray(target)
    return float(abs(np.trace(target.conj().T @ np.asarray(actual))) / target.shape[0])
