"""Deterministic serialization helpers.

Reports must be byte-identical across runs for the same inputs, so floats
are always rendered through ``format(x, '.17g')`` (17 significant digits,
enough to round-trip IEEE doubles) and JSON is rendered by hand with
sorted keys and no whitespace surprises.
"""

from __future__ import annotations

import numpy as np


def f17(x: float) -> str:
    """A float as a plain JSON-compatible literal with 17 significant digits."""
    x = float(x)
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError(f"non-finite value {x!r} cannot be serialized")
    text = format(x, ".17g")
    # '.17g' may produce bare integers; keep them valid JSON numbers as-is.
    return text


def render_json(obj, indent: int = 0) -> str:
    """Render dicts/lists/scalars as deterministic JSON text."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return f17(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        z = complex(obj)
        return render_json({"im": z.imag, "re": z.real}, indent)
    if isinstance(obj, str):
        import json

        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        keys = sorted(obj.keys())
        parts = [f'{inner}"{k}": {render_json(obj[k], indent + 1)}' for k in keys]
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        parts = [f"{inner}{render_json(v, indent + 1)}" for v in seq]
        return "[\n" + ",\n".join(parts) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path, obj) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(render_json(obj))
        fh.write("\n")
