"""Reading and writing labeled 68-point landmark datasets (CSV and JSONL).

CSV layout: a required header ``frame_id[,label][,timestamp_s],x0,y0,...,x67,y67``.
JSONL layout: one object per line with ``frame_id``, optional ``label`` and
``timestamp_s``, and ``points`` (68 ``[x, y]`` pairs).

Floats are written with ``repr`` so that a write/load round trip is bitwise exact.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    EmptyDataset,
    FieldCountMismatch,
    InvalidDataset,
    InvalidLabel,
    IoError,
    NonFiniteCoordinate,
    NonNumericField,
    ParseError,
    RecordError,
)

N_LANDMARKS = 68
N_COORDS = 2 * N_LANDMARKS

# Standard 68-point convention. Each six-tuple is ordered (p1, p2, p3, p4, p5, p6):
# p1/p4 are the corners, (p2, p6) and (p3, p5) the vertical pairs.
LEFT_EYE = (36, 37, 38, 39, 40, 41)
RIGHT_EYE = (42, 43, 44, 45, 46, 47)
INNER_LIP = tuple(range(60, 68))
# 62 and 66 (inner-lip midpoints) are not used by the six-point ratio.
MOUTH_SIX = (60, 61, 63, 64, 65, 67)

COORD_COLUMNS = tuple(f"{axis}{i}" for i in range(N_LANDMARKS) for axis in ("x", "y"))

Point = tuple[float, float]


@dataclass(frozen=True)
class LandmarkFrame:
    frame_id: int
    points: tuple[Point, ...]
    timestamp_s: float | None = None

    def __post_init__(self):
        if isinstance(self.frame_id, bool) or not isinstance(self.frame_id, int) or self.frame_id < 0:
            raise RecordError(f"frame_id must be a non-negative integer, got {self.frame_id!r}")
        if len(self.points) != N_LANDMARKS:
            raise FieldCountMismatch(f"expected {N_LANDMARKS} points, got {len(self.points)}")
        for i, p in enumerate(self.points):
            if len(p) != 2:
                raise FieldCountMismatch(f"point {i} has {len(p)} coordinates")
            if not (math.isfinite(p[0]) and math.isfinite(p[1])):
                raise NonFiniteCoordinate(f"point {i} is not finite: {p!r}")
        if self.timestamp_s is not None and not (math.isfinite(self.timestamp_s) and self.timestamp_s >= 0):
            raise RecordError(f"timestamp_s must be finite and non-negative, got {self.timestamp_s!r}")


@dataclass(frozen=True)
class LabeledSample:
    frame: LandmarkFrame
    label: int | None = None

    def __post_init__(self):
        if self.label is not None and (isinstance(self.label, bool) or self.label not in (0, 1)):
            raise InvalidLabel(f"label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class Dataset:
    samples: tuple[LabeledSample, ...]
    provenance: str = ""

    def __post_init__(self):
        labeled = {s.label is not None for s in self.samples}
        if len(labeled) > 1:
            raise InvalidDataset("dataset mixes labeled and unlabeled samples")
        prev = -1
        for s in self.samples:
            if s.frame.frame_id <= prev:
                raise InvalidDataset(
                    f"frame_ids must be strictly increasing ({s.frame.frame_id} follows {prev})"
                )
            prev = s.frame.frame_id

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def is_labeled(self) -> bool:
        return bool(self.samples) and self.samples[0].label is not None

    @property
    def frames(self) -> list[LandmarkFrame]:
        return [s.frame for s in self.samples]

    @property
    def labels(self) -> list[int]:
        return [s.label for s in self.samples]  # type: ignore[misc]

    def subset(self, indices: Iterable[int], provenance: str | None = None) -> "Dataset":
        """Samples at ``indices``, re-sorted by frame_id so the ordering invariant holds."""
        idx = sorted(indices, key=lambda i: self.samples[i].frame.frame_id)
        return Dataset(tuple(self.samples[i] for i in idx), provenance or self.provenance)


@dataclass(frozen=True)
class CsvSchema:
    has_label: bool = True
    has_timestamp: bool = False

    @property
    def header(self) -> list[str]:
        cols = ["frame_id"]
        if self.has_label:
            cols.append("label")
        if self.has_timestamp:
            cols.append("timestamp_s")
        return cols + list(COORD_COLUMNS)

    @property
    def n_fields(self) -> int:
        return 1 + self.has_label + self.has_timestamp + N_COORDS

    @classmethod
    def from_header(cls, header: Sequence[str]) -> "CsvSchema":
        names = [h.strip() for h in header]
        for schema in (cls(True, True), cls(True, False), cls(False, True), cls(False, False)):
            if names == schema.header:
                return schema
        raise RecordError(
            "header must be frame_id,[label],[timestamp_s],x0,y0,...,x67,y67"
        )


def _parse_int(text: str, name: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise NonNumericField(f"{name} is not an integer: {text!r}") from None


def _parse_float(text: str, name: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise NonNumericField(f"{name} is not numeric: {text!r}") from None


def _parse_label(value) -> int:
    if isinstance(value, str):
        value = _parse_int(value, "label")
    if isinstance(value, bool) or value not in (0, 1):
        raise InvalidLabel(f"label must be 0 or 1, got {value!r}")
    return int(value)


def parse_frame_record(record: str | Sequence[str], schema: CsvSchema) -> LabeledSample:
    """Parse one CSV data line (or its already-split fields) into a sample.

    The sample's ``label`` is None when the schema has no label column.
    """
    fields = next(csv.reader([record])) if isinstance(record, str) else list(record)
    if len(fields) != schema.n_fields:
        raise FieldCountMismatch(f"expected {schema.n_fields} fields, got {len(fields)}")
    pos = 0
    frame_id = _parse_int(fields[pos], "frame_id")
    pos += 1
    label = None
    if schema.has_label:
        label = _parse_label(fields[pos])
        pos += 1
    timestamp = None
    if schema.has_timestamp:
        if fields[pos].strip():
            timestamp = _parse_float(fields[pos], "timestamp_s")
        pos += 1
    coords = [_parse_float(v, COORD_COLUMNS[i]) for i, v in enumerate(fields[pos:])]
    points = tuple((coords[2 * i], coords[2 * i + 1]) for i in range(N_LANDMARKS))
    frame = LandmarkFrame(frame_id, points, timestamp)
    return LabeledSample(frame, label)


def parse_json_record(obj: dict) -> LabeledSample:
    if not isinstance(obj, dict):
        raise RecordError("record is not a JSON object")
    missing = {"frame_id", "points"} - obj.keys()
    if missing:
        raise FieldCountMismatch(f"missing keys: {sorted(missing)}")
    frame_id = obj["frame_id"]
    if isinstance(frame_id, bool) or not isinstance(frame_id, int):
        raise NonNumericField(f"frame_id is not an integer: {frame_id!r}")
    label = obj.get("label")
    if label is not None:
        label = _parse_label(label)
    timestamp = obj.get("timestamp_s")
    if timestamp is not None and (isinstance(timestamp, bool) or not isinstance(timestamp, (int, float))):
        raise NonNumericField(f"timestamp_s is not numeric: {timestamp!r}")
    raw = obj["points"]
    if not isinstance(raw, list) or len(raw) != N_LANDMARKS:
        raise FieldCountMismatch(f"points must be a list of {N_LANDMARKS} pairs")
    points = []
    for i, p in enumerate(raw):
        if not isinstance(p, list) or len(p) != 2:
            raise FieldCountMismatch(f"point {i} is not an [x, y] pair")
        for v in p:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise NonNumericField(f"point {i} has a non-numeric coordinate: {v!r}")
        points.append((float(p[0]), float(p[1])))
    frame = LandmarkFrame(frame_id, tuple(points), None if timestamp is None else float(timestamp))
    return LabeledSample(frame, label)


def infer_format(path: str | Path, fmt: str | None = None) -> str:
    if fmt:
        if fmt not in ("csv", "jsonl"):
            raise IoError(f"unknown format {fmt!r} (expected csv or jsonl)")
        return fmt
    return "jsonl" if Path(path).suffix.lower() in (".jsonl", ".ndjson") else "csv"


def _wrap(exc: Exception, line: int, row: int | None) -> ParseError:
    err = ParseError(str(exc), line=line, row=row)
    err.__cause__ = exc
    return err


def load_dataset(path: str | Path, fmt: str | None = None) -> Dataset:
    """Load a dataset, preserving row order.

    Parse failures raise :class:`ParseError` carrying both the physical file
    ``line`` and the 1-based data ``row``.
    """
    path = Path(path)
    fmt = infer_format(path, fmt)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    samples: list[LabeledSample] = []
    if fmt == "jsonl":
        row = 0
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            row += 1
            try:
                samples.append(parse_json_record(json.loads(line)))
            except (RecordError, json.JSONDecodeError) as exc:
                raise _wrap(exc, lineno, row) from exc
        return _validated(samples, path)

    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise EmptyDataset(f"{path} is empty")
    try:
        schema = CsvSchema.from_header(next(csv.reader([lines[0]])))
    except RecordError as exc:
        raise _wrap(exc, 1, None) from exc
    row = 0
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        row += 1
        try:
            samples.append(parse_frame_record(line, schema))
        except RecordError as exc:
            raise _wrap(exc, lineno, row) from exc
    return _validated(samples, path)


def _validated(samples: list[LabeledSample], path: Path) -> Dataset:
    if not samples:
        raise EmptyDataset(f"{path} contains no samples")
    try:
        return Dataset(tuple(samples), provenance=str(path))
    except InvalidDataset as exc:
        raise InvalidDataset(f"{path}: {exc}") from exc


def write_dataset(dataset: Dataset, path: str | Path, fmt: str | None = None) -> None:
    path = Path(path)
    fmt = infer_format(path, fmt)
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            if fmt == "jsonl":
                for s in dataset.samples:
                    obj: dict = {"frame_id": s.frame.frame_id}
                    if s.label is not None:
                        obj["label"] = s.label
                    if s.frame.timestamp_s is not None:
                        obj["timestamp_s"] = s.frame.timestamp_s
                    obj["points"] = [[x, y] for x, y in s.frame.points]
                    fh.write(json.dumps(obj, allow_nan=False))
                    fh.write("\n")
                return
            schema = CsvSchema(
                has_label=dataset.is_labeled,
                has_timestamp=any(s.frame.timestamp_s is not None for s in dataset.samples),
            )
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(schema.header)
            for s in dataset.samples:
                row = [str(s.frame.frame_id)]
                if schema.has_label:
                    row.append(str(s.label))
                if schema.has_timestamp:
                    ts = s.frame.timestamp_s
                    row.append("" if ts is None else repr(ts))
                for x, y in s.frame.points:
                    row.append(repr(x))
                    row.append(repr(y))
                writer.writerow(row)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
