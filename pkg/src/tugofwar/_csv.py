"""Shared CSV formatting: comma separated, 17 significant digits."""
from __future__ import annotations

import io
from typing import Iterable, Sequence


def fmt(value) -> str:
    if isinstance(value, (bool,)):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.17g}"
    try:
        return f"{float(value):.17g}"
    except (TypeError, ValueError):
        return str(value)


def render(columns: Sequence[str], rows: Iterable[Sequence], meta: dict | None = None) -> str:
    buf = io.StringIO()
    if meta:
        buf.write("# " + ",".join(f"{k}={fmt(v)}" for k, v in meta.items()) + "\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def write(path, columns, rows, meta=None) -> str:
    text = render(columns, rows, meta)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return text
