"""Structural and grammar-level parsing of model responses.

Two layers, deliberately separate:

  * `extract_sections` looks only at the four structural tags and never
    fails; missing pieces come back as None.
  * `parse_answer` applies the per-task answer grammar to an extracted
    answer span and raises `FormatError` naming the first rule violated.

Grammar strings accepted per task (whitespace tolerant, keywords
case-insensitive, one trailing period optional):

  inference / prediction:  YYYY-MM
  difference:  Event 1: YYYY-MM. Event 2: YYYY-MM. Difference: <int> months.
  ordering:    Event 1: YYYY-MM. Event 2: YYYY-MM. Event 3: YYYY-MM. Order: a-b-c.
  completion:  Event: YYYY-MM. Missing entity: <year or month>.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from importlib import resources
from typing import Union

from .records import DateYM, EntityKind, TaskKind, TimeEntity, month_distance

__all__ = [
    "TAG_NAMES",
    "TagCounts",
    "ParsedResponse",
    "RefusalStatus",
    "FormatError",
    "InferenceAnswer",
    "DifferenceAnswer",
    "OrderingAnswer",
    "CompletionAnswer",
    "TaskAnswer",
    "extract_sections",
    "detect_refusal",
    "parse_answer",
    "render_answer",
    "parse_month_word",
    "month_distance",
    "circular_month_distance",
]

TAG_NAMES = ("<think>", "</think>", "<answer>", "</answer>")

_THINK_RE = re.compile(r"<think>(.*?)</think>", re.DOTALL)
_ANSWER_RE = re.compile(r"<answer>(.*?)</answer>", re.DOTALL)
_REFUSAL_RE = re.compile(r"\bno\s+event\b|\bnone\b", re.IGNORECASE)

_DATE = r"(\d{4})\s*-\s*(\d{1,2})"
_INFERENCE_RE = re.compile(rf"^\s*{_DATE}\s*\.?\s*$")
_DIFFERENCE_RE = re.compile(
    rf"^\s*event\s*1\s*:\s*{_DATE}\s*\.\s*"
    rf"event\s*2\s*:\s*{_DATE}\s*\.\s*"
    rf"difference\s*:\s*(\d+)\s*months?\s*\.?\s*$",
    re.IGNORECASE,
)
_ORDERING_RE = re.compile(
    rf"^\s*event\s*1\s*:\s*{_DATE}\s*\.\s*"
    rf"event\s*2\s*:\s*{_DATE}\s*\.\s*"
    rf"event\s*3\s*:\s*{_DATE}\s*\.\s*"
    rf"order\s*:\s*([1-3])\s*-\s*([1-3])\s*-\s*([1-3])\s*\.?\s*$",
    re.IGNORECASE,
)
_COMPLETION_RE = re.compile(
    rf"^\s*event\s*:\s*{_DATE}\s*\.\s*missing\s+entity\s*:\s*(.+?)\s*\.?\s*$",
    re.IGNORECASE | re.DOTALL,
)

_MONTH_NAMES = [
    "January", "February", "March", "April", "May", "June",
    "July", "August", "September", "October", "November", "December",
]

with resources.files("timescore.data").joinpath("month_variants.json").open() as _fh:
    _MONTH_WORDS: dict[str, int] = json.load(_fh)


@dataclass(frozen=True)
class TagCounts:
    """Occurrence counts of the four structural tags."""

    think_open: int
    think_close: int
    answer_open: int
    answer_close: int

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.think_open, self.think_close, self.answer_open, self.answer_close)

    def all_present(self) -> bool:
        return all(c >= 1 for c in self.as_tuple())

    def all_single(self) -> bool:
        return all(c == 1 for c in self.as_tuple())


@dataclass(frozen=True)
class ParsedResponse:
    """Structural view of a raw rollout. Spans are byte-exact, untrimmed."""

    raw: str
    think_text: str | None
    answer_text: str | None
    tags: TagCounts
    token_count: int


class RefusalStatus(enum.Enum):
    NONE = "none"
    REFUSAL = "refusal"
    MISSING = "missing"


class FormatError(ValueError):
    """Answer span fails its task grammar. `rule` names the first violation."""

    def __init__(self, rule: str, detail: str = ""):
        self.rule = rule
        super().__init__(f"{rule}: {detail}" if detail else rule)


@dataclass(frozen=True)
class InferenceAnswer:
    date: DateYM


@dataclass(frozen=True)
class DifferenceAnswer:
    date1: DateYM
    date2: DateYM
    delta_months: int


@dataclass(frozen=True)
class OrderingAnswer:
    dates: tuple[DateYM, DateYM, DateYM]
    order: tuple[int, int, int]


@dataclass(frozen=True)
class CompletionAnswer:
    date: DateYM
    entity: TimeEntity


TaskAnswer = Union[InferenceAnswer, DifferenceAnswer, OrderingAnswer, CompletionAnswer]


def extract_sections(raw: str) -> ParsedResponse:
    """Split a raw response into think span, answer span, and tag counts.

    The first <answer>...</answer> pair wins when several exist. Token count
    is whitespace tokens over the whole raw string. Never raises.
    """
    tags = TagCounts(
        think_open=raw.count("<think>"),
        think_close=raw.count("</think>"),
        answer_open=raw.count("<answer>"),
        answer_close=raw.count("</answer>"),
    )
    think = _THINK_RE.search(raw)
    answer = _ANSWER_RE.search(raw)
    return ParsedResponse(
        raw=raw,
        think_text=think.group(1) if think else None,
        answer_text=answer.group(1) if answer else None,
        tags=tags,
        token_count=len(raw.split()),
    )


def detect_refusal(answer_text: str | None) -> RefusalStatus:
    """Missing or blank span is MISSING; a whole-word 'no event' or 'none' is REFUSAL."""
    if answer_text is None or not answer_text.strip():
        return RefusalStatus.MISSING
    if _REFUSAL_RE.search(answer_text):
        return RefusalStatus.REFUSAL
    return RefusalStatus.NONE


def _date_from_groups(year_s: str, month_s: str) -> DateYM:
    month = int(month_s)
    if not 1 <= month <= 12:
        raise FormatError("month-range", f"month {month} outside 1..12")
    return DateYM(int(year_s), month)


def parse_month_word(text: str) -> int:
    """Month index from an English name, 3-letter abbreviation, or numeral 1..12."""
    key = text.strip().lower()
    if key in _MONTH_WORDS:
        return _MONTH_WORDS[key]
    if key.isdigit() and len(key) <= 2 and 1 <= int(key) <= 12:
        return int(key)
    raise FormatError("month-word", f"not a month: {text!r}")


def _parse_entity(text: str) -> TimeEntity:
    token = text.strip()
    if re.fullmatch(r"\d{4}", token):
        return TimeEntity(EntityKind.YEAR, int(token))
    return TimeEntity(EntityKind.MONTH, parse_month_word(token))


def parse_answer(task: TaskKind, answer_text: str) -> TaskAnswer:
    """Parse an answer span under the task's grammar.

    Args:
        task: which grammar applies.
        answer_text: the extracted answer span (whole span must match).

    Returns:
        The task-shaped answer value.

    Raises:
        FormatError: naming the first grammar rule violated.
    """
    if task in (TaskKind.INFERENCE, TaskKind.PREDICTION):
        m = _INFERENCE_RE.match(answer_text)
        if not m:
            raise FormatError("date", f"expected YYYY-MM, got {answer_text!r}")
        return InferenceAnswer(_date_from_groups(m.group(1), m.group(2)))

    if task is TaskKind.DIFFERENCE:
        m = _DIFFERENCE_RE.match(answer_text)
        if not m:
            raise FormatError("difference-shape", f"got {answer_text!r}")
        return DifferenceAnswer(
            date1=_date_from_groups(m.group(1), m.group(2)),
            date2=_date_from_groups(m.group(3), m.group(4)),
            delta_months=int(m.group(5)),
        )

    if task is TaskKind.ORDERING:
        m = _ORDERING_RE.match(answer_text)
        if not m:
            raise FormatError("ordering-shape", f"got {answer_text!r}")
        order = (int(m.group(7)), int(m.group(8)), int(m.group(9)))
        if sorted(order) != [1, 2, 3]:
            raise FormatError("order-permutation", f"{order} is not a permutation of 1..3")
        return OrderingAnswer(
            dates=(
                _date_from_groups(m.group(1), m.group(2)),
                _date_from_groups(m.group(3), m.group(4)),
                _date_from_groups(m.group(5), m.group(6)),
            ),
            order=order,
        )

    if task is TaskKind.COMPLETION:
        m = _COMPLETION_RE.match(answer_text)
        if not m:
            raise FormatError("completion-shape", f"got {answer_text!r}")
        return CompletionAnswer(
            date=_date_from_groups(m.group(1), m.group(2)),
            entity=_parse_entity(m.group(3)),
        )

    raise FormatError("task", f"unknown task {task!r}")


def render_answer(task: TaskKind, answer: TaskAnswer) -> str:
    """Canonical answer string for a task answer. Inverse of parse_answer."""
    if task in (TaskKind.INFERENCE, TaskKind.PREDICTION):
        assert isinstance(answer, InferenceAnswer)
        return str(answer.date)
    if task is TaskKind.DIFFERENCE:
        assert isinstance(answer, DifferenceAnswer)
        unit = "month" if answer.delta_months == 1 else "months"
        return (
            f"Event 1: {answer.date1}. Event 2: {answer.date2}. "
            f"Difference: {answer.delta_months} {unit}."
        )
    if task is TaskKind.ORDERING:
        assert isinstance(answer, OrderingAnswer)
        d1, d2, d3 = answer.dates
        a, b, c = answer.order
        return f"Event 1: {d1}. Event 2: {d2}. Event 3: {d3}. Order: {a}-{b}-{c}."
    if task is TaskKind.COMPLETION:
        assert isinstance(answer, CompletionAnswer)
        if answer.entity.kind is EntityKind.YEAR:
            entity = str(answer.entity.value)
        else:
            entity = _MONTH_NAMES[answer.entity.value - 1]
        return f"Event: {answer.date}. Missing entity: {entity}."
    raise ValueError(f"unknown task {task!r}")


def circular_month_distance(m1: int, m2: int) -> int:
    """Distance between month indices on the 12-month circle."""
    for m in (m1, m2):
        if not 1 <= m <= 12:
            raise ValueError(f"month index out of range 1..12: {m}")
    d = abs(m1 - m2)
    return min(d, 12 - d)
