"""Deterministic text renderings and atomic file writes."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import TYPE_CHECKING, Any


if TYPE_CHECKING:
    from collections.abc import Iterable


def format_cell(value: object) -> str:
    """Floats at 17 significant digits; everything else via ``str``."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return str(value)
        return format(value, ".17g")
    return str(value)


def csv_text(
    header: Iterable[str],
    rows: Iterable[Iterable[object]],
    comments: Iterable[str] = (),
) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    lines.extend(",".join(format_cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def columns_text(
    columns: Iterable[str],
    rows: Iterable[Iterable[object]],
    comments: Iterable[str] = (),
) -> str:
    """Whitespace-separated columns with ``#`` header lines (gnuplot style)."""
    lines = [f"# {c}" for c in comments]
    lines.append("# " + " ".join(columns))
    lines.extend(" ".join(format_cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def json_text(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True, allow_nan=True) + "\n"


def atomic_write_text(path: Path, text: str) -> None:
    """Write via a temporary file in the same directory and rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        Path(tmp).replace(path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
