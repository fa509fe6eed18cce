"""Small JSONL helpers shared by every module that touches disk.

All files are UTF-8 with LF line endings and one object per line, so that
rebuilding an artifact from the same inputs is byte-identical.
"""

from __future__ import annotations

import json
import os
from typing import Any, Iterable, Iterator


def dump_line(obj: Any) -> str:
    """Canonical single-line encoding: no ASCII escaping, stable separators."""
    return json.dumps(obj, ensure_ascii=False, separators=(", ", ": "))


def write_jsonl(path: str, objs: Iterable[Any]) -> int:
    """Write objects one per line; returns the number of lines written."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for obj in objs:
            fh.write(dump_line(obj))
            fh.write("\n")
            n += 1
    return n


def read_jsonl(path: str) -> Iterator[Any]:
    """Yield parsed objects from a trusted JSONL file; blank lines are skipped."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def iter_jsonl_lines(path: str) -> Iterator[tuple[int, str]]:
    """Yield (line_no, raw_line) pairs so callers can report per-line failures."""
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            yield i, line.rstrip("\n")
