"""Tracked coordinate frames and their CSV / JSONL file formats.

CSV: header ``t,entity,x,y,z``, one row per entity per timestamp; rows of
one frame are contiguous. JSONL: one object per frame,
``{"t": 0.0, "entities": {"robot.ee": [x, y, z], ...}}``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from ..errors import StreamError

CSV_COLUMNS = ("t", "entity", "x", "y", "z")


@dataclass(frozen=True)
class Frame:
    t: float
    entities: Mapping[str, tuple[float, float, float]]

    def position(self, name: str) -> np.ndarray:
        try:
            return np.array(self.entities[name], dtype=float)
        except KeyError:
            raise StreamError(f"frame t={self.t} has no entity {name!r}", "missing-field") from None

    def translated(self, offset) -> "Frame":
        off = np.asarray(offset, dtype=float)
        return Frame(self.t, {k: tuple(float(c) for c in np.asarray(v) + off) for k, v in self.entities.items()})


def make_frame(t: float, entities: Mapping[str, Iterable[float]]) -> Frame:
    out = {}
    for name, pos in entities.items():
        xyz = tuple(float(c) for c in pos)
        if len(xyz) != 3 or not all(math.isfinite(c) for c in xyz):
            raise StreamError(f"entity {name!r} at t={t} needs 3 finite coordinates", "malformed-record")
        out[str(name)] = xyz
    return Frame(float(t), out)


def _detect_format(path: Path, fmt: str | None) -> str:
    fmt = fmt or path.suffix.lstrip(".").lower()
    if fmt not in ("csv", "jsonl"):
        raise StreamError(f"cannot tell frame format of {path}; use csv or jsonl", "malformed-record")
    return fmt


def load_frames(path, fmt: str | None = None) -> list[Frame]:
    """Parse a frame file; errors name the offending line."""
    path = Path(path)
    fmt = _detect_format(path, fmt)
    with open(path, newline="") as fh:
        return _load_csv(fh) if fmt == "csv" else _load_jsonl(fh)


def _load_csv(fh) -> list[Frame]:
    reader = csv.reader(fh)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise StreamError("empty frame file", "missing-column") from None
    missing = [c for c in CSV_COLUMNS if c not in header]
    if missing:
        raise StreamError(f"line 1: missing columns {missing}", "missing-column")
    col = {c: header.index(c) for c in CSV_COLUMNS}

    frames: list[Frame] = []
    cur_t = None
    cur: dict = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            t = float(row[col["t"]])
            name = row[col["entity"]].strip()
            xyz = tuple(float(row[col[c]]) for c in "xyz")
        except (IndexError, ValueError) as exc:
            raise StreamError(f"line {lineno}: {exc}", "malformed-record") from None
        if not (math.isfinite(t) and all(math.isfinite(c) for c in xyz)) or not name:
            raise StreamError(f"line {lineno}: non-finite value or empty entity", "malformed-record")
        if cur_t is not None and t == cur_t:
            if name in cur:
                raise StreamError(
                    f"line {lineno}: duplicate timestamp {t} for entity {name!r}", "non-monotone-timestamps"
                )
            cur[name] = xyz
            continue
        if cur_t is not None and t < cur_t:
            raise StreamError(f"line {lineno}: timestamp {t} after {cur_t}", "non-monotone-timestamps")
        if cur_t is not None:
            frames.append(Frame(cur_t, cur))
        cur_t, cur = t, {name: xyz}
    if cur_t is not None:
        frames.append(Frame(cur_t, cur))
    return frames


def _load_jsonl(fh) -> list[Frame]:
    frames: list[Frame] = []
    for lineno, line in enumerate(fh, start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            frame = make_frame(doc["t"], doc["entities"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise StreamError(f"line {lineno}: {exc}", "malformed-record") from None
        if not math.isfinite(frame.t):
            raise StreamError(f"line {lineno}: non-finite timestamp", "malformed-record")
        if frames and frame.t <= frames[-1].t:
            raise StreamError(
                f"line {lineno}: timestamp {frame.t} not after {frames[-1].t}", "non-monotone-timestamps"
            )
        frames.append(frame)
    return frames


def write_frames(frames: Iterable[Frame], path, fmt: str | None = None) -> None:
    path = Path(path)
    fmt = _detect_format(path, fmt)
    with open(path, "w", newline="") as fh:
        if fmt == "csv":
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for f in frames:
                for name, (x, y, z) in f.entities.items():
                    writer.writerow([repr(float(f.t)), name, repr(float(x)), repr(float(y)), repr(float(z))])
        else:
            for f in frames:
                doc = {"t": float(f.t), "entities": {k: [float(c) for c in v] for k, v in f.entities.items()}}
                fh.write(json.dumps(doc) + "\n")


def check_monotone(frames) -> None:
    for k in range(1, len(frames)):
        if not frames[k].t > frames[k - 1].t:
            raise StreamError(f"frame {k}: timestamp {frames[k].t} not after {frames[k - 1].t}", "non-monotone-timestamps")
