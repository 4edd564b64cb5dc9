"""JSON output with full double precision, and plain-text dataset IO."""

import io
import json
import math
import sys

import numpy as np

from .errors import ArgumentError


def _fmt_float(x):
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    s = "%.17g" % x
    # keep floats distinguishable from integers on reload
    return s if any(c in s for c in ".en") else s + ".0"


def _encode(obj, out):
    if obj is None:
        out.write("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.write("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.write(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.write(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.write(json.dumps(obj))
    elif isinstance(obj, dict):
        out.write("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.write(", ")
            _encode(str(k), out)
            out.write(": ")
            _encode(v, out)
        out.write("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.write("[")
        for i, v in enumerate(obj.tolist() if isinstance(obj, np.ndarray) else obj):
            if i:
                out.write(", ")
            _encode(v, out)
        out.write("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj):
    """JSON text with every float written to 17 significant digits."""
    buf = io.StringIO()
    _encode(obj, buf)
    return buf.getvalue()


def format_values(values):
    return "".join("%.17g\n" % float(v) for v in values)


def read_values(path):
    """One number per line; blank lines and '#' comments are skipped. '-' reads stdin."""
    if path == "-":
        text = sys.stdin.read()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    vals = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            vals.append(float(line))
        except ValueError:
            raise ArgumentError(f"line {lineno}: not a number: {line!r}") from None
    if not vals:
        raise ArgumentError("dataset is empty")
    return np.array(vals)


def read_text(path):
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()
