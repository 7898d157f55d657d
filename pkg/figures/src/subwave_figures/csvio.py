"""CSV input: plain tables with a leading '#' comment block."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class MissingInputError(FileNotFoundError):
    pass


@dataclass(frozen=True)
class Table:
    columns: dict            # name -> float ndarray (strings kept as object arrays)
    comments: dict
    path: str

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    @property
    def n_rows(self) -> int:
        first = next(iter(self.columns.values()))
        return len(first)


def read_table(path) -> Table:
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"input CSV missing: {path}")
    comments = {}
    header = None
    rows = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            comments[key.strip()] = val.strip()
        elif header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    if header is None or not rows:
        raise MissingInputError(f"input CSV empty: {path}")
    columns = {}
    for j, name in enumerate(header):
        raw = [r[j] if j < len(r) else "" for r in rows]
        try:
            columns[name] = np.array([float(v) if v != "" else np.nan for v in raw])
        except ValueError:
            columns[name] = np.array(raw, dtype=object)
    if "command" not in comments:
        raise MissingInputError(f"input CSV lacks a manifest comment block: {path}")
    return Table(columns, comments, str(path))
