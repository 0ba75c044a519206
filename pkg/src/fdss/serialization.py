"""JSON and CSV output with 17-significant-digit floats."""

from __future__ import annotations

import csv
import enum
import io
import json
import math

import numpy as np

from .profiles import Profile


def fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    # keep the value a JSON float on re-parse
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _plain(obj):
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, (set, frozenset)):
        return sorted(_plain(v) for v in obj)
    if isinstance(obj, tuple):
        return list(obj)
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    return obj


def _encode(obj, indent, level, out):
    obj = _plain(obj)
    pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
    end = "" if indent is None else "\n" + " " * (indent * level)
    sep = ", " if indent is None else ","
    if obj is None or isinstance(obj, bool):
        out.append(json.dumps(obj))
    elif isinstance(obj, float):
        out.append(fmt_float(obj))
    elif isinstance(obj, (int, str)):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(sep)
            out.append(pad + json.dumps(str(k)) + ": ")
            _encode(v, indent, level + 1, out)
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        out.append("[")
        # numeric arrays stay on one line
        flat = indent is not None and all(isinstance(v, (int, float)) for v in obj)
        for i, v in enumerate(obj):
            if i:
                out.append(", " if flat else sep)
            if not flat:
                out.append(pad)
            _encode(v, indent, level + 1, out)
        out.append("]" if flat else end + "]")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int | None = 2) -> str:
    """JSON text with every float written at 17 significant digits."""
    out = []
    _encode(obj, indent, 0, out)
    return "".join(out)


def loads(text: str):
    return json.loads(text)


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def profile_to_csv(prof: Profile) -> str:
    return rows_to_csv(("xi", "f", "h"),
                       zip(map(float, prof.xi), map(float, prof.f), map(float, prof.h)))


def profile_to_dict(prof: Profile) -> dict:
    return {
        "params": prof.ode.ps.to_dict(),
        "s": prof.ode.s,
        "alpha": prof.ode.alpha,
        "beta": prof.ode.beta,
        "D": prof.D,
        "termination": prof.termination.value,
        "xi_star": prof.xi_star,
        "xi0": prof.xi0,
        "meta": {k: v for k, v in prof.meta.items() if k != "message"},
        "xi": prof.xi,
        "f": prof.f,
        "h": prof.h,
    }
