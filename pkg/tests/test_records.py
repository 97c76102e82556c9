from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_record
from timescore.records import (
    DateYM,
    Difficulty,
    EntityKind,
    EventText,
    TaskKind,
    TimeEntity,
    month_distance,
    validate_record,
)

ym_st = st.builds(DateYM, year=st.integers(2000, 2100), month=st.integers(1, 12))


def test_date_parse_and_str_roundtrip():
    d = DateYM.parse("2020-05")
    assert (d.year, d.month) == (2020, 5)
    assert str(d) == "2020-05"
    assert DateYM.parse(str(DateYM(2024, 12))) == DateYM(2024, 12)


@pytest.mark.parametrize("bad", ["2020", "2020-13", "2020-0", "20-05", "2020-05-01", "abcd-ef", ""])
def test_date_parse_rejects(bad):
    with pytest.raises(ValueError):
        DateYM.parse(bad)


def test_date_month_bounds():
    with pytest.raises(ValueError):
        DateYM(2020, 0)
    with pytest.raises(ValueError):
        DateYM(2020, 13)


def test_date_ordering_is_year_then_month():
    assert DateYM(2020, 12) < DateYM(2021, 1)
    assert DateYM(2020, 3) < DateYM(2020, 4)
    assert not DateYM(2020, 3) < DateYM(2020, 3)


@given(a=ym_st, b=ym_st)
def test_month_distance_symmetric_nonnegative(a, b):
    assert month_distance(a, b) == month_distance(b, a) >= 0
    assert month_distance(a, a) == 0


def test_month_distance_crosses_years():
    assert month_distance(DateYM(2020, 11), DateYM(2021, 2)) == 3
    assert month_distance(DateYM(2019, 1), DateYM(2021, 1)) == 24


def test_time_entity_bounds():
    TimeEntity(EntityKind.MONTH, 12)
    with pytest.raises(ValueError):
        TimeEntity(EntityKind.MONTH, 13)
    with pytest.raises(ValueError):
        TimeEntity(EntityKind.MONTH, 0)
    with pytest.raises(ValueError):
        TimeEntity(EntityKind.YEAR, 0)


def test_validate_clean_records():
    assert validate_record(make_record(TaskKind.INFERENCE, ["2020-05"])) == []
    assert validate_record(make_record(TaskKind.DIFFERENCE, ["2020-01", "2021-03"], delta=14)) == []
    assert (
        validate_record(
            make_record(TaskKind.ORDERING, ["2020-03", "2020-01", "2020-06"], order=(2, 1, 3))
        )
        == []
    )
    assert (
        validate_record(
            make_record(TaskKind.COMPLETION, ["2018-07"], entity=TimeEntity(EntityKind.YEAR, 2016))
        )
        == []
    )


def test_validate_difference_delta_mismatch():
    rec = make_record(TaskKind.DIFFERENCE, ["2020-01", "2021-03"], delta=10)
    violations = validate_record(rec)
    assert any("delta_months" in v for v in violations)


def test_validate_event_count_mismatch():
    rec = make_record(TaskKind.DIFFERENCE, ["2020-01"], delta=0)
    violations = validate_record(rec)
    assert any("2 events" in v for v in violations)
    assert any("2 ground-truth dates" in v for v in violations)


def test_validate_order_not_permutation():
    rec = make_record(TaskKind.ORDERING, ["2020-01", "2020-02", "2020-03"], order=(1, 1, 3))
    assert any("permutation" in v for v in validate_record(rec))


def test_validate_missing_entity_and_stray_fields():
    rec = make_record(TaskKind.COMPLETION, ["2020-01"])
    assert any("entity" in v for v in validate_record(rec))
    rec = make_record(TaskKind.INFERENCE, ["2020-01"], delta=5)
    assert any("delta_months" in v for v in validate_record(rec))


def test_validate_year_window():
    rec = make_record(TaskKind.INFERENCE, ["1999-12"])
    assert any("1999" in v for v in validate_record(rec))


def test_validate_empty_headline_and_id():
    from dataclasses import replace

    rec = make_record(TaskKind.INFERENCE, ["2020-05"], record_id="")
    bad = replace(rec, events=(EventText(""),))
    violations = validate_record(bad)
    assert any("id is empty" in v for v in violations)
    assert any("headline is empty" in v for v in violations)


def test_validate_is_pure_and_idempotent():
    rec = make_record(TaskKind.DIFFERENCE, ["2020-01", "2021-03"], delta=10)
    first = validate_record(rec)
    second = validate_record(rec)
    assert first == second
    assert rec.ground_truth.delta_months == 10


def test_unset_difficulty_is_default():
    rec = make_record(TaskKind.INFERENCE, ["2020-05"])
    assert rec.difficulty is Difficulty.UNSET
