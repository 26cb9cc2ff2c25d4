"""Deterministic report writers.

JSON is written with a fixed indent and insertion-ordered keys; floats use
``repr`` so every double survives a round trip.  CSV files start with
``#``-prefixed provenance lines which :func:`read_csv_table` skips.  No
wall-clock values are ever written, so reruns are byte-identical.
"""

import csv
import hashlib
import json
import math
from pathlib import Path

from . import __version__

TOOL = "flexifuzz"


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def provenance(seed, inputs=(), **extra):
    """``inputs`` is an iterable of ``(label, path)`` pairs."""
    doc = {
        "tool": TOOL,
        "version": __version__,
        "seed": seed,
        "inputs": {str(label): "sha256:" + file_digest(path) for label, path in inputs},
    }
    doc.update(extra)
    return doc


def _clean(obj):
    # NaN / inf are not JSON; failed entries are reported as null
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return _clean(obj.item())
    return obj


def write_json(path, doc):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(doc), indent=2, allow_nan=False) + "\n", encoding="utf-8")
    return path


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    return str(v)


def write_csv_table(path, header, rows, meta=None):
    """Write ``rows`` under ``header``; ``meta`` becomes leading comment lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        for key, value in (meta or {}).items():
            if isinstance(value, (dict, list)):
                value = json.dumps(value, separators=(",", ":"))
            fh.write(f"# {key}: {value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def read_csv_table(path):
    """Return ``(header, rows)`` with comment lines dropped; cells stay strings."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#") and ln.strip()]
    rows = list(csv.reader(lines))
    if not rows:
        return [], []
    return rows[0], rows[1:]


def csv_meta(prov):
    """Flatten a provenance dict into CSV comment metadata."""
    meta = {"tool": f"{prov['tool']} {prov['version']}", "seed": prov["seed"]}
    for label, digest in prov.get("inputs", {}).items():
        meta[f"input {label}"] = digest
    return meta
