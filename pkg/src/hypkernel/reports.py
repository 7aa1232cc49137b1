"""Report serialization: JSON with a schema tag, CSV node dumps, atomic writes."""

from __future__ import annotations

import csv
import dataclasses
import enum
import io
import json
import math
import os
import tempfile
from fractions import Fraction

import numpy as np

SCHEMA_VERSION = 1
CSV_VERSION = 1


def library_version() -> str:
    from . import __version__
    return __version__


def to_jsonable(obj):
    """Recursively convert reports to JSON-ready data.

    Non-finite floats become the strings ``"inf"``, ``"-inf"`` and ``"nan"``;
    finite floats keep their shortest round-trip repr (17 significant digits at most).
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)
                if not f.name.startswith("_")}
    if isinstance(obj, enum.Enum):
        return obj.name
    if isinstance(obj, Fraction):
        return {"num": obj.numerator, "den": obj.denominator, "value": float(obj)}
    if isinstance(obj, dict):
        return {str(to_jsonable(k)) if not isinstance(k, str) else k: to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj, key=str) if isinstance(obj, (set, frozenset)) else obj
        return [to_jsonable(v) for v in items]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def report_document(kind: str, payload) -> dict:
    doc = {"schema": SCHEMA_VERSION, "kind": kind, "library_version": library_version()}
    doc.update(to_jsonable(payload))
    return doc


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the target directory and rename over ``path``."""
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


def dumps_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def write_json(path, kind: str, payload) -> dict:
    doc = report_document(kind, payload)
    atomic_write_text(path, dumps_json(doc))
    return doc


def format_float(x) -> str:
    return repr(float(x))


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# hypkernel csv v{CSV_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> None:
    atomic_write_text(path, csv_text(header, rows))
