"""Atomic JSON/CSV writers for run records and experiment reports."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

__all__ = ["SUMMARY_COLUMNS", "atomic_write_text", "write_json", "dumps_json", "summary_row",
           "write_summary_csv", "append_summary_csv"]

# mkstemp creates 0600 files; published outputs should follow the umask instead
_UMASK = os.umask(0)
os.umask(_UMASK)

SUMMARY_COLUMNS = ("variant", "alpha", "beta", "lambda", "T", "start_point", "seed",
                   "iterations", "final_error", "status")


def atomic_write_text(path, text):
    """Write to a sibling temp file, fsync, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.chmod(tmp, 0o666 & ~_UMASK)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def dumps_json(payload):
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, payload):
    atomic_write_text(path, dumps_json(payload))


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def summary_row(variant, opt, start_point, seed, iterations, final_error, status):
    """One CSV row in :data:`SUMMARY_COLUMNS` order from an optimizer dict."""
    return [
        variant,
        _fmt(opt.get("alpha")),
        _fmt(opt.get("beta")),
        _fmt(opt.get("lambda")),
        _fmt(opt.get("horizon")),
        start_point,
        _fmt(seed),
        _fmt(iterations),
        _fmt(final_error),
        status,
    ]


def _render_csv(rows, header):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def write_summary_csv(path, rows, header=SUMMARY_COLUMNS):
    atomic_write_text(path, _render_csv(rows, header))


def append_summary_csv(path, rows):
    """Append rows, writing the header first if the file is new.

    The whole new file content is staged and renamed so a failure never
    leaves a half-written line behind.
    """
    path = Path(path)
    existing = path.read_text(encoding="utf-8") if path.exists() else ""
    header = None if existing else SUMMARY_COLUMNS
    atomic_write_text(path, existing + _render_csv(rows, header))
