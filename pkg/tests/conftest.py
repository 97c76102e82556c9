from __future__ import annotations

import pytest

from timescore.records import (
    BenchRecord,
    DateYM,
    Difficulty,
    EntityKind,
    EventText,
    GroundTruth,
    Split,
    TaskKind,
    TimeEntity,
)


def make_record(
    task: TaskKind,
    dates: list[str],
    delta: int | None = None,
    order: tuple[int, int, int] | None = None,
    entity: TimeEntity | None = None,
    difficulty: Difficulty = Difficulty.UNSET,
    record_id: str = "r1",
    desk: str = "Business",
    split: Split = Split.TRAIN,
    period: str = "2021-06",
) -> BenchRecord:
    parsed = tuple(DateYM.parse(d) for d in dates)
    return BenchRecord(
        id=record_id,
        task=task,
        events=tuple(EventText(f"headline {i + 1}", f"abstract {i + 1}") for i in range(len(parsed))),
        ground_truth=GroundTruth(dates=parsed, delta_months=delta, order=order, entity=entity),
        split=split,
        period=DateYM.parse(period),
        difficulty=difficulty,
        desk=desk,
    )


def wrap(answer: str, think: str = "step by step reasoning here") -> str:
    """Canonical well-formed response: each tag exactly once."""
    return f"<think>{think}</think>\n<answer>{answer}</answer>"


@pytest.fixture
def year_entity() -> TimeEntity:
    return TimeEntity(EntityKind.YEAR, 2016)


@pytest.fixture
def month_entity() -> TimeEntity:
    return TimeEntity(EntityKind.MONTH, 6)
