"""Canonical JSON emission: byte-identical output for identical inputs.

Floats are written with repr (shortest round-trip, at most 17 significant
digits), which is deterministic across runs and platforms using IEEE-754
doubles.  Dict insertion order is preserved, so builders define the layout.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np


def _serialize(obj, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        f = float(obj)
        if not math.isfinite(f):
            raise ValueError("non-finite float in JSON document")
        out.append(repr(f))
    elif isinstance(obj, str):
        out.append(_escape(obj))
    elif isinstance(obj, dict):
        out.append("{")
        first = True
        for k, v in obj.items():
            if not isinstance(k, str):
                raise TypeError(f"JSON object keys must be strings, got {type(k)}")
            if not first:
                out.append(",")
            first = False
            out.append(_escape(k))
            out.append(":")
            _serialize(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        first = True
        for v in obj:
            if not first:
                out.append(",")
            first = False
            _serialize(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj)} canonically")


_ESCAPES = {
    '"': '\\"',
    "\\": "\\\\",
    "\n": "\\n",
    "\r": "\\r",
    "\t": "\\t",
    "\b": "\\b",
    "\f": "\\f",
}


def _escape(s: str) -> str:
    parts = ['"']
    for ch in s:
        if ch in _ESCAPES:
            parts.append(_ESCAPES[ch])
        elif ord(ch) < 0x20:
            parts.append(f"\\u{ord(ch):04x}")
        else:
            parts.append(ch)
    parts.append('"')
    return "".join(parts)


def dumps(obj) -> str:
    """Canonical JSON text of a document."""
    out: list[str] = []
    _serialize(obj, out)
    return "".join(out)


def dump_path(obj, path: str | Path) -> Path:
    """Write a canonical JSON document (trailing newline included)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps(obj).encode("utf-8") + b"\n")
    return path
