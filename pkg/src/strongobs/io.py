"""CSV and manifest output with atomic writes."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

__all__ = ["write_csv", "write_json", "format_row"]

CSV_FORMAT = "%.17g"


def format_row(values, fmt=CSV_FORMAT):
    return ",".join(fmt % v for v in values)


def _atomic_write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.",
                               suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, header, rows, fmt=CSV_FORMAT):
    """Write a numeric table; the file appears only once complete."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    lines = [",".join(header)]
    lines.extend(format_row(r, fmt) for r in rows)
    return _atomic_write_text(path, "\n".join(lines) + "\n")


def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def write_json(path, payload):
    text = json.dumps(payload, indent=2, sort_keys=True, default=_default)
    return _atomic_write_text(path, text + "\n")
