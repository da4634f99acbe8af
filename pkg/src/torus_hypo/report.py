"""Deterministic machine-readable reports.

Every CLI command emits one report: a JSON document with sorted keys and a
fixed float rendering (17 significant digits), so identical inputs produce
byte-identical output across runs and platforms.  Reports carry a format
version, an echo of the command, a SHA-256 digest of the primary input file,
the command-specific body, and *deterministic* runtime statistics (counters
such as frequencies processed or grid sizes — never wall-clock times, which
would break the byte-determinism contract).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MalformedInput

FORMAT_VERSION = "torus-hypo-report/1"


# ---------------------------------------------------------------------------
# Canonical JSON
# ---------------------------------------------------------------------------


def _canon_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == int(x) and abs(x) < 1e16:
        # Stable integral rendering (avoids "2" vs "2.0" ambiguity).
        return f"{int(x)}.0"
    return format(x, ".17g")


def _canon(obj) -> str:
    if obj is None or obj is True or obj is False:
        return json.dumps(obj)
    if isinstance(obj, (np.bool_,)):
        return json.dumps(bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _canon_float(float(obj))
    if isinstance(obj, complex):
        return _canon({"im": obj.imag, "re": obj.real})
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        inner = ",".join(f"{json.dumps(str(k))}:{_canon(v)}" for k, v in items)
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_canon(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return _canon(obj.tolist())
    if hasattr(obj, "to_json"):
        return _canon(obj.to_json())
    raise MalformedInput(f"cannot serialize {type(obj).__name__} canonically")


def canonical_json(obj) -> str:
    """Canonical rendering: sorted keys, fixed 17-digit floats, no spaces."""
    return _canon(obj)


def input_digest(path) -> str:
    """SHA-256 hex digest of a file's bytes."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------


@dataclass
class Report:
    """One command's machine-readable result."""

    command: list
    body: dict
    digest: str | None = None
    runtime: dict = field(default_factory=dict)
    version: str = FORMAT_VERSION

    def to_obj(self) -> dict:
        return {
            "format": self.version,
            "command": list(self.command),
            "input_sha256": self.digest,
            "body": self.body,
            "runtime": self.runtime,
        }

    def to_text(self) -> str:
        return canonical_json(self.to_obj()) + "\n"

    def to_bytes(self) -> bytes:
        return self.to_text().encode("utf-8")

    def write(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())
