"""Line-delimited JSON dataset IO: streaming reads, manifests, desk stats.

One record per line. A bad line never kills the stream; it lands in the
error list with its line number and the read moves on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, Mapping

from .records import (
    BenchRecord,
    DateYM,
    Difficulty,
    EntityKind,
    EventText,
    GroundTruth,
    Split,
    TaskKind,
    TimeEntity,
    validate_record,
)

SCHEMA_VERSION = "1"

# Newsroom desk share of the corpus, percent.
DEFAULT_DESK_TARGETS: dict[str, float] = {
    "Foreign": 20.8,
    "Business": 16.5,
    "OpEd": 14.2,
    "National": 10.9,
    "Washington": 9.6,
    "Metro": 8.6,
    "Politics": 5.5,
    "Science": 4.6,
}


@dataclass(frozen=True)
class LineError:
    line: int
    message: str


def _require(obj: Mapping, key: str):
    if key not in obj:
        raise ValueError(f"missing field {key!r}")
    return obj[key]


def _entity_from_json(obj: Mapping) -> TimeEntity:
    kind = str(_require(obj, "kind"))
    try:
        entity_kind = EntityKind(kind)
    except ValueError:
        raise ValueError(f"unknown entity kind {kind!r}") from None
    value = _require(obj, "value")
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValueError(f"entity value must be an int, got {value!r}")
    return TimeEntity(entity_kind, value)


def record_from_json(obj: Mapping) -> BenchRecord:
    """Build a BenchRecord from one decoded JSON object.

    Raises ValueError on structural problems (wrong types, missing fields,
    unparseable dates). Semantic consistency stays with validate_record.
    """
    if not isinstance(obj, Mapping):
        raise ValueError("record must be a JSON object")

    task_raw = str(_require(obj, "task"))
    try:
        task = TaskKind(task_raw)
    except ValueError:
        raise ValueError(f"unknown task {task_raw!r}") from None

    events_raw = _require(obj, "events")
    if not isinstance(events_raw, list):
        raise ValueError("events must be a list")
    events = []
    for i, ev in enumerate(events_raw):
        if not isinstance(ev, Mapping):
            raise ValueError(f"event {i} must be an object")
        events.append(
            EventText(headline=str(_require(ev, "headline")), abstract=str(ev.get("abstract", "")))
        )

    gt_raw = _require(obj, "ground_truth")
    if not isinstance(gt_raw, Mapping):
        raise ValueError("ground_truth must be an object")
    dates_raw = _require(gt_raw, "dates")
    if not isinstance(dates_raw, list):
        raise ValueError("ground_truth.dates must be a list")
    dates = tuple(DateYM.parse(str(d)) for d in dates_raw)

    delta = gt_raw.get("delta_months")
    if delta is not None and (not isinstance(delta, int) or isinstance(delta, bool)):
        raise ValueError(f"delta_months must be an int, got {delta!r}")

    order_raw = gt_raw.get("order")
    order = None
    if order_raw is not None:
        if not isinstance(order_raw, list) or len(order_raw) != 3:
            raise ValueError(f"order must be a 3-element list, got {order_raw!r}")
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in order_raw):
            raise ValueError(f"order entries must be ints, got {order_raw!r}")
        order = (order_raw[0], order_raw[1], order_raw[2])

    entity_raw = gt_raw.get("entity")
    entity = _entity_from_json(entity_raw) if entity_raw is not None else None

    difficulty_raw = obj.get("difficulty", Difficulty.UNSET.value)
    try:
        difficulty = Difficulty(str(difficulty_raw))
    except ValueError:
        raise ValueError(f"unknown difficulty {difficulty_raw!r}") from None

    split_raw = str(_require(obj, "split"))
    try:
        split = Split(split_raw)
    except ValueError:
        raise ValueError(f"unknown split {split_raw!r}") from None

    provenance = obj.get("provenance")
    if provenance is not None:
        provenance = str(provenance)

    return BenchRecord(
        id=str(_require(obj, "id")),
        task=task,
        events=tuple(events),
        ground_truth=GroundTruth(dates=dates, delta_months=delta, order=order, entity=entity),
        split=split,
        period=DateYM.parse(str(_require(obj, "period"))),
        difficulty=difficulty,
        desk=str(obj.get("desk", "")),
        provenance=provenance,
    )


def record_to_json(record: BenchRecord) -> dict:
    """Plain dict mirror of a record, stable field order, None fields dropped."""
    gt: dict = {"dates": [str(d) for d in record.ground_truth.dates]}
    if record.ground_truth.delta_months is not None:
        gt["delta_months"] = record.ground_truth.delta_months
    if record.ground_truth.order is not None:
        gt["order"] = list(record.ground_truth.order)
    if record.ground_truth.entity is not None:
        gt["entity"] = {
            "kind": record.ground_truth.entity.kind.value,
            "value": record.ground_truth.entity.value,
        }
    out: dict = {
        "id": record.id,
        "task": record.task.value,
        "events": [
            {"headline": ev.headline, "abstract": ev.abstract} for ev in record.events
        ],
        "ground_truth": gt,
        "difficulty": record.difficulty.value,
        "desk": record.desk,
        "split": record.split.value,
        "period": str(record.period),
    }
    if record.provenance is not None:
        out["provenance"] = record.provenance
    return out


def read_records(
    source: str | Path | IO[str],
    errors: list[LineError] | None = None,
) -> Iterator[BenchRecord]:
    """Stream records from a line-delimited JSON file or open text handle.

    Blank lines are skipped. Lines that fail JSON decoding, structural
    mapping, or semantic validation are logged to `errors` (when given)
    with their 1-based line number; the stream continues.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            yield from read_records(fh, errors)
        return

    for line_no, line in enumerate(source, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            if errors is not None:
                errors.append(LineError(line_no, f"bad JSON: {exc.msg}"))
            continue
        try:
            record = record_from_json(obj)
        except ValueError as exc:
            if errors is not None:
                errors.append(LineError(line_no, str(exc)))
            continue
        violations = validate_record(record)
        if violations:
            if errors is not None:
                errors.append(LineError(line_no, "; ".join(violations)))
            continue
        yield record


def write_records(records: Iterable[BenchRecord], sink: IO[str]) -> int:
    """Write records as line-delimited JSON. Returns the line count."""
    n = 0
    for record in records:
        sink.write(json.dumps(record_to_json(record), ensure_ascii=False, separators=(",", ":")))
        sink.write("\n")
        n += 1
    return n


@dataclass
class DatasetManifest:
    total: int = 0
    by_task: dict[str, int] = field(default_factory=dict)
    by_split: dict[str, int] = field(default_factory=dict)
    by_desk: dict[str, int] = field(default_factory=dict)
    by_period: dict[str, int] = field(default_factory=dict)
    error_count: int = 0
    schema_version: str = SCHEMA_VERSION

    def to_json_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "total": self.total,
            "by_task": dict(sorted(self.by_task.items())),
            "by_split": dict(sorted(self.by_split.items())),
            "by_desk": dict(sorted(self.by_desk.items())),
            "by_period": dict(sorted(self.by_period.items())),
            "error_count": self.error_count,
        }


def build_manifest(records: Iterable[BenchRecord], error_count: int = 0) -> DatasetManifest:
    m = DatasetManifest(error_count=error_count)
    for r in records:
        m.total += 1
        m.by_task[r.task.value] = m.by_task.get(r.task.value, 0) + 1
        m.by_split[r.split.value] = m.by_split.get(r.split.value, 0) + 1
        desk = r.desk or "(none)"
        m.by_desk[desk] = m.by_desk.get(desk, 0) + 1
        period = str(r.period)
        m.by_period[period] = m.by_period.get(period, 0) + 1
    return m


@dataclass(frozen=True)
class DeskRow:
    desk: str
    count: int
    share_pct: float
    target_pct: float | None
    delta_pct: float | None


def desk_distribution(
    records: Iterable[BenchRecord],
    targets: Mapping[str, float] | None = None,
) -> list[DeskRow]:
    """Per-desk share of the corpus, with deltas against a target mix.

    Desks in the target but absent from the data still get a row, so a
    missing desk shows up as a negative delta instead of vanishing.
    """
    counts: dict[str, int] = {}
    total = 0
    for r in records:
        desk = r.desk or "(none)"
        counts[desk] = counts.get(desk, 0) + 1
        total += 1

    desks = set(counts)
    if targets:
        desks |= set(targets)
    rows = []
    for desk in sorted(desks):
        count = counts.get(desk, 0)
        share = 100.0 * count / total if total else 0.0
        target = targets.get(desk) if targets else None
        delta = share - target if target is not None else None
        rows.append(DeskRow(desk, count, share, target, delta))
    return rows


def split_filter(
    records: Iterable[BenchRecord],
    split: Split | None = None,
    period_range: tuple[DateYM, DateYM] | None = None,
) -> Iterator[BenchRecord]:
    """Keep records matching a split and an inclusive period window."""
    if period_range is not None and period_range[0] > period_range[1]:
        raise ValueError(f"inverted period range: {period_range[0]}..{period_range[1]}")
    for r in records:
        if split is not None and r.split is not split:
            continue
        if period_range is not None and not (period_range[0] <= r.period <= period_range[1]):
            continue
        yield r
