"""Reading and writing datasets and result documents."""

import csv
import json
import math
import os

import numpy as np

from .estimator import Dataset
from .exceptions import DomainError

__all__ = [
    "SCHEMA_VERSION",
    "read_dataset",
    "write_dataset",
    "dumps_result",
    "write_result",
    "write_rows",
]

SCHEMA_VERSION = 1


def _version():
    from . import __version__

    return __version__


def read_dataset(path):
    """Read a CSV file with header ``x1,...,xd,y``.

    Raises
    ------
    DomainError
        Empty file, malformed header, ragged rows, or a cell that is not a
        finite number. The message names the file, line and column.
    """
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DomainError(f"cannot read {path}: {exc.strerror or exc}") from exc
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise DomainError(f"{path}: empty file")
    header = [c.strip() for c in rows[0]]
    if len(header) < 2 or header[-1] != "y":
        raise DomainError(f"{path}: header must be x1,...,xd,y; got {','.join(header)}")
    expected = [f"x{j + 1}" for j in range(len(header) - 1)]
    if header[:-1] != expected:
        raise DomainError(f"{path}: covariate columns must be named {','.join(expected)}")
    if len(rows) == 1:
        raise DomainError(f"{path}: no data rows")
    values = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:]):
        line = i + 2
        if len(row) != len(header):
            raise DomainError(
                f"{path}, line {line}: expected {len(header)} fields, got {len(row)}"
            )
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise DomainError(
                    f"{path}, line {line}, column {header[j]}: not a number: {cell!r}"
                ) from None
            if not math.isfinite(v):
                raise DomainError(f"{path}, line {line}, column {header[j]}: non-finite value {cell!r}")
            values[i, j] = v
    return Dataset(values[:, :-1], values[:, -1])


def write_dataset(data, path):
    """Write a dataset as CSV; :func:`read_dataset` reads it back exactly."""
    header = [f"x{j + 1}" for j in range(data.d)] + ["y"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for x, y in zip(data.X, data.Y):
            # repr of a Python float round-trips exactly
            writer.writerow([repr(float(v)) for v in x] + [repr(float(y))])


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps_result(result):
    """JSON text of a result dict with ``version`` and ``schema`` filled in.

    Non-finite floats become ``null``.
    """
    doc = dict(result)
    doc.setdefault("version", _version())
    doc.setdefault("schema", SCHEMA_VERSION)
    return json.dumps(_clean(doc), indent=2) + "\n"


def write_result(result, path):
    """Write a result document as JSON.

    ``result`` is a dict; ``version`` and ``schema`` are filled in. A
    ``table`` entry (list of row dicts) is also written next to the JSON
    file as CSV with the same stem.

    Returns
    -------
    list of str
        Paths written.
    """
    written = []
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(dumps_result(result))
        written.append(str(path))
        if result.get("table"):
            csv_path = os.path.splitext(str(path))[0] + ".csv"
            write_rows(result["table"], csv_path)
            written.append(csv_path)
    except OSError as exc:
        raise OSError(f"cannot write {exc.filename or path}: {exc.strerror or exc}") from exc
    return written


def write_rows(rows, path):
    """Write a list of dicts as CSV; columns are the union of keys in order."""
    columns = []
    for row in rows:
        columns.extend(k for k in row if k not in columns)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n", restval="")
        writer.writeheader()
        writer.writerows(rows)
