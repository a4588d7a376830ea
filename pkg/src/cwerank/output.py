"""Serialization helpers shared by the CLI and the report bundle writer."""

from __future__ import annotations

import contextlib
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Sequence


def dumps_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def csv_text(rows: Sequence[Sequence], metadata: dict | None = None) -> str:
    buf = io.StringIO()
    if metadata:
        for key, value in sorted(metadata.items()):
            buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\r\n")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerows(rows)
    return buf.getvalue()


def ranking_rows(r) -> list[list]:
    rows = [["rank", "cwe_id", "abstraction", "value", "n_i"]]
    for k, e in enumerate(r.entries, start=1):
        rows.append([k, f"CWE-{e.cwe}", e.abstraction, f"{e.value:.2f}", e.count])
    return rows


def write_output(text: str, output: Path | None) -> None:
    """Write atomically to ``output`` (or stdout); nothing is left behind on failure."""
    if output is None:
        sys.stdout.write(text)
        return
    output.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{output.name}.", dir=output.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, output)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise
