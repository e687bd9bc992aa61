"""Canonical record encoding shared by every file format in the pipeline.

All data files are line-delimited records: one JSON object per line, UTF-8,
LF endings, keys sorted, no insignificant whitespace. Two runs that produce
the same records therefore produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Iterable


def canonical_json(obj: Any) -> str:
    """Encode a value in the canonical textual form used everywhere.

    Tuples collapse to lists so that the encoding is the identity for
    round-tripped values. NaN/Infinity are rejected; the model file maps
    its +infinity sentinel to null before calling this.
    """
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=True, allow_nan=False)


def write_jsonl(path: str | Path, rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(canonical_json(row))
            fh.write("\n")


def read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: malformed record: {exc}") from exc
    return rows


def encode_float(x: float | None) -> float | None:
    """Map the +infinity threshold sentinel to null for the model file."""
    if x is None:
        return None
    if math.isinf(x):
        return None
    return x


def decode_float(x: float | None) -> float:
    return math.inf if x is None else float(x)
