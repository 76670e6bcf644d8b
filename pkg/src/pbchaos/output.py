"""Deterministic CSV / manifest emission.

Floats are written with repr-faithful 17 significant digits so that a
rerun with the same inputs produces byte-identical files.
"""

from __future__ import annotations

import hashlib
import os


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int,)):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    try:
        import numpy as np
        if isinstance(value, np.integer):
            return str(int(value))
        if isinstance(value, np.floating):
            return format(float(value), ".17g")
    except ImportError:  # pragma: no cover
        pass
    return str(value)


def write_csv(path, header, rows) -> str:
    """Write rows to a CSV file and return the path."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def digest_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, entries, artifacts) -> str:
    """Plain-text manifest: resolved settings plus one digest per artifact.

    entries is a mapping of setting name to value; artifacts a list of
    file paths whose sha256 digests get recorded.
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    lines = [f"{k}: {_fmt(v)}" for k, v in entries.items()]
    for art in artifacts:
        lines.append(f"artifact: {os.path.basename(art)}")
        lines.append(f"sha256: {digest_file(art)}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path
