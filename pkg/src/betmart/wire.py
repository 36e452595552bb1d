"""Canonical JSON wire format.

Session logs must replay bit-identically and auditors diff them, so the
encoder is deterministic: keys keep insertion order, floats are written
with 17 significant digits (lossless for float64), and infinities are the
strings "inf" / "-inf".
"""

from __future__ import annotations

import math
from typing import Any

NEG_INF_TOKEN = "-inf"
POS_INF_TOKEN = "inf"


def format_float(x: float) -> str:
    """Render a finite float with 17 significant digits (round-trip exact)."""
    return format(float(x), ".17g")


def encode_number(x: float) -> Any:
    """Map a float onto its wire value: a number, or an infinity token."""
    x = float(x)
    if math.isinf(x):
        return POS_INF_TOKEN if x > 0 else NEG_INF_TOKEN
    if math.isnan(x):
        raise ValueError("NaN is not representable on the wire")
    return x


def decode_number(v: Any) -> float:
    """Inverse of :func:`encode_number`."""
    if v == POS_INF_TOKEN:
        return math.inf
    if v == NEG_INF_TOKEN:
        return -math.inf
    return float(v)


def _write(obj: Any, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, str):
        # json.dumps on a str produces a valid JSON string literal
        import json

        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        if math.isinf(obj):
            out.append('"%s"' % (POS_INF_TOKEN if obj > 0 else NEG_INF_TOKEN))
        elif math.isnan(obj):
            raise ValueError("NaN is not representable on the wire")
        else:
            out.append(format_float(obj))
    elif isinstance(obj, dict):
        out.append("{")
        first = True
        for key, val in obj.items():
            if not isinstance(key, str):
                raise TypeError(f"wire object keys must be strings, got {key!r}")
            if not first:
                out.append(",")
            _write(key, out)
            out.append(":")
            _write(val, out)
            first = False
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, val in enumerate(obj):
            if i:
                out.append(",")
            _write(val, out)
        out.append("]")
    else:
        raise TypeError(f"not wire-encodable: {type(obj).__name__}")


def dumps(obj: Any) -> str:
    """Serialize to canonical JSON text."""
    out: list[str] = []
    _write(obj, out)
    return "".join(out)


def loads(text: str) -> Any:
    import json

    return json.loads(text)
