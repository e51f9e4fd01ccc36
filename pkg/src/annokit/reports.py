"""Plain-text report tables with machine-readable JSON twins."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence


def format_table(headers: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    """Fixed-width table; floats rendered with four decimals."""

    def cell(v: object) -> str:
        if isinstance(v, float):
            return f"{v:.4f}"
        return "" if v is None else str(v)

    grid = [[cell(v) for v in row] for row in rows]
    widths = [
        max(len(h), *(len(r[i]) for r in grid)) if grid else len(h)
        for i, h in enumerate(headers)
    ]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for row in grid:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def write_report(
    path: str | Path,
    headers: Sequence[str],
    rows: Sequence[Sequence[object]],
    meta: dict | None = None,
) -> None:
    """Write <path> as text and <path>.json as the machine-readable twin."""
    path = Path(path)
    path.write_text(format_table(headers, rows), encoding="utf-8")
    payload = {
        "columns": list(headers),
        "rows": [list(r) for r in rows],
    }
    if meta:
        payload["meta"] = meta
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
