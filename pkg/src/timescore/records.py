"""Core domain types shared by every scoring stage.

Construction of the small value types (dates, entities) enforces their own
invariants and raises ValueError on nonsense. Record-level consistency is a
data question, not a construction failure: `validate_record` returns a list
of violation messages and never raises.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

YEAR_MIN = 2000
YEAR_MAX = 2100


class TaskKind(enum.Enum):
    INFERENCE = "inference"
    DIFFERENCE = "difference"
    ORDERING = "ordering"
    COMPLETION = "completion"
    PREDICTION = "prediction"


# How many events a prompt of each task carries.
EVENT_COUNT: dict[TaskKind, int] = {
    TaskKind.INFERENCE: 1,
    TaskKind.DIFFERENCE: 2,
    TaskKind.ORDERING: 3,
    TaskKind.COMPLETION: 1,
    TaskKind.PREDICTION: 1,
}


class Difficulty(enum.Enum):
    EASY = "easy"
    NORMAL_HARD = "normal_hard"
    UNSET = "unset"


class Split(enum.Enum):
    TRAIN = "train"
    TEST = "test"


class Stage(enum.Enum):
    """Training stage. Stage two is the future-prediction regime."""

    STAGE1 = "stage1"
    STAGE2 = "stage2"


@dataclass(frozen=True, order=True)
class DateYM:
    """Month-resolution date. Ordering is (year, month) lexicographic."""

    year: int
    month: int

    def __post_init__(self) -> None:
        if not isinstance(self.year, int) or isinstance(self.year, bool):
            raise ValueError(f"year must be an int, got {self.year!r}")
        if not isinstance(self.month, int) or isinstance(self.month, bool):
            raise ValueError(f"month must be an int, got {self.month!r}")
        if not 1 <= self.month <= 12:
            raise ValueError(f"month out of range 1..12: {self.month}")

    @classmethod
    def parse(cls, text: str) -> DateYM:
        """Parse 'YYYY-MM'. Raises ValueError on anything else."""
        parts = text.strip().split("-")
        if len(parts) != 2 or not parts[0].isdigit() or not parts[1].isdigit():
            raise ValueError(f"not a YYYY-MM date: {text!r}")
        if len(parts[0]) != 4:
            raise ValueError(f"year must be 4 digits: {text!r}")
        return cls(int(parts[0]), int(parts[1]))

    def total_months(self) -> int:
        return self.year * 12 + self.month

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


def month_distance(a: DateYM, b: DateYM) -> int:
    """Absolute distance in months between two dates."""
    return abs(a.total_months() - b.total_months())


class EntityKind(enum.Enum):
    YEAR = "year"
    MONTH = "month"


@dataclass(frozen=True)
class TimeEntity:
    """A masked temporal entity: either a year number or a month index."""

    kind: EntityKind
    value: int

    def __post_init__(self) -> None:
        if not isinstance(self.value, int) or isinstance(self.value, bool):
            raise ValueError(f"entity value must be an int, got {self.value!r}")
        if self.kind is EntityKind.MONTH and not 1 <= self.value <= 12:
            raise ValueError(f"month entity out of range 1..12: {self.value}")
        if self.kind is EntityKind.YEAR and not 1 <= self.value <= 9999:
            raise ValueError(f"year entity out of range: {self.value}")


@dataclass(frozen=True)
class EventText:
    headline: str
    abstract: str = ""


@dataclass(frozen=True)
class GroundTruth:
    """Task-dependent target. Unused fields stay None."""

    dates: tuple[DateYM, ...]
    delta_months: int | None = None
    order: tuple[int, int, int] | None = None
    entity: TimeEntity | None = None


@dataclass(frozen=True)
class BenchRecord:
    id: str
    task: TaskKind
    events: tuple[EventText, ...]
    ground_truth: GroundTruth
    split: Split
    period: DateYM
    difficulty: Difficulty = Difficulty.UNSET
    desk: str = ""
    provenance: str | None = None


@dataclass
class ScoredSample:
    """One scored rollout: the reward components and their composition."""

    r_acc: float
    r_ans_fmt: float
    r_tags: float
    p_no_event: float
    p_len_rep: float
    total: float
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "r_acc": self.r_acc,
            "r_ans_fmt": self.r_ans_fmt,
            "r_tags": self.r_tags,
            "p_no_event": self.p_no_event,
            "p_len_rep": self.p_len_rep,
            "total": self.total,
            "diagnostics": self.diagnostics,
        }


def _check_dates_in_window(dates: tuple[DateYM, ...], label: str, out: list[str]) -> None:
    for d in dates:
        if not YEAR_MIN <= d.year <= YEAR_MAX:
            out.append(f"{label} year {d.year} outside {YEAR_MIN}..{YEAR_MAX}")


def validate_record(record: BenchRecord) -> list[str]:
    """Check record-level consistency. Returns violation messages, empty if clean.

    Pure and idempotent; violations are data for the caller, never exceptions.
    """
    out: list[str] = []
    gt = record.ground_truth
    task = record.task

    if not record.id:
        out.append("id is empty")

    want_events = EVENT_COUNT[task]
    if len(record.events) != want_events:
        out.append(f"{task.value} needs {want_events} events, has {len(record.events)}")
    for i, ev in enumerate(record.events):
        if not ev.headline.strip():
            out.append(f"event {i + 1} headline is empty")

    if len(gt.dates) != want_events:
        out.append(f"{task.value} needs {want_events} ground-truth dates, has {len(gt.dates)}")
    _check_dates_in_window(gt.dates, "ground-truth date", out)
    _check_dates_in_window((record.period,), "period", out)

    if task is TaskKind.DIFFERENCE:
        if gt.delta_months is None:
            out.append("difference record missing delta_months")
        else:
            if gt.delta_months < 0:
                out.append(f"delta_months is negative: {gt.delta_months}")
            if len(gt.dates) == 2 and gt.delta_months != month_distance(gt.dates[0], gt.dates[1]):
                out.append(
                    f"delta_months {gt.delta_months} disagrees with dates "
                    f"({month_distance(gt.dates[0], gt.dates[1])} months apart)"
                )
    elif gt.delta_months is not None:
        out.append(f"{task.value} record must not set delta_months")

    if task is TaskKind.ORDERING:
        if gt.order is None:
            out.append("ordering record missing order")
        elif sorted(gt.order) != [1, 2, 3]:
            out.append(f"order {gt.order} is not a permutation of 1..3")
    elif gt.order is not None:
        out.append(f"{task.value} record must not set order")

    if task is TaskKind.COMPLETION:
        if gt.entity is None:
            out.append("completion record missing entity")
    elif gt.entity is not None:
        out.append(f"{task.value} record must not set entity")

    return out
