"""Shaping terms around the accuracy kernel: bonuses, penalties, composition.

The two size penalties (length, repetition) compete rather than stack: the
total subtracts max(length, repetition), never their sum.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Any

from .accuracy import AccuracyResult
from .parsing import ParsedResponse, RefusalStatus, detect_refusal
from .records import ScoredSample, Stage

TOTAL_MIN = -0.8
TOTAL_MAX = 1.1


@dataclass(frozen=True)
class ShapingConfig:
    format_bonus: float = 0.05
    tag_bonus_unit: float = 0.025
    length_threshold: int = 900
    length_max: int = 1024
    length_scale: float = 0.3
    missing_penalty_stage1: float = 0.2
    refusal_penalty_stage1: float = 0.1
    missing_penalty_stage2: float = 0.3
    refusal_penalty_stage2: float = 0.2
    word_run_limit: int = 5
    word_run_step: float = 0.1
    phrase_length: int = 8
    phrase_step: float = 0.15
    diversity_ngram: int = 3
    diversity_floor: float = 0.35
    repetition_cap: float = 0.5

    def __post_init__(self) -> None:
        if self.length_threshold >= self.length_max:
            raise ValueError("length_threshold must sit below length_max")
        if not 0 < self.diversity_floor <= 1:
            raise ValueError("diversity_floor must be in (0, 1]")
        if self.phrase_length < 2:
            raise ValueError("phrase_length must be at least 2")


DEFAULT_SHAPING = ShapingConfig()


def format_bonus(parsed: ParsedResponse, parse_ok: bool, config: ShapingConfig = DEFAULT_SHAPING) -> float:
    """Bonus only when an answer span exists and its grammar parsed."""
    if parsed.answer_text is not None and parse_ok:
        return config.format_bonus
    return 0.0


def tag_bonus(parsed: ParsedResponse, config: ShapingConfig = DEFAULT_SHAPING) -> float:
    """Half the bonus for all four tags present, the other half for each exactly once."""
    b = 0.0
    if parsed.tags.all_present():
        b += config.tag_bonus_unit
        if parsed.tags.all_single():
            b += config.tag_bonus_unit
    return b


def no_event_penalty(status: RefusalStatus, stage: Stage, config: ShapingConfig = DEFAULT_SHAPING) -> float:
    """Silence costs more than refusing, and stage two raises both prices."""
    if status is RefusalStatus.NONE:
        return 0.0
    if stage is Stage.STAGE2:
        return config.missing_penalty_stage2 if status is RefusalStatus.MISSING else config.refusal_penalty_stage2
    return config.missing_penalty_stage1 if status is RefusalStatus.MISSING else config.refusal_penalty_stage1


def length_penalty(token_count: int, config: ShapingConfig = DEFAULT_SHAPING) -> float:
    """Zero through the threshold, then linear up to the full scale at length_max."""
    if token_count <= config.length_threshold:
        return 0.0
    over = token_count - config.length_threshold
    span = config.length_max - config.length_threshold
    return min(1.0, over / span) * config.length_scale


@dataclass(frozen=True)
class RepetitionBreakdown:
    word_run: float
    phrase: float
    ngram_diversity: float

    @property
    def total(self) -> float:
        return max(self.word_run, self.phrase, self.ngram_diversity)


def _longest_run(tokens: list[str]) -> int:
    best = run = 1 if tokens else 0
    for prev, cur in zip(tokens, tokens[1:]):
        run = run + 1 if cur == prev else 1
        best = max(best, run)
    return best


def repetition_penalty(raw: str, config: ShapingConfig = DEFAULT_SHAPING) -> RepetitionBreakdown:
    """Three repetition signals over lowercased whitespace tokens; max wins.

    word_run: a single token repeated in an unbroken run longer than the limit.
    phrase: distinct fixed-length phrases that occur at least twice.
    ngram_diversity: distinct-trigram ratio falling under the floor.
    """
    tokens = raw.lower().split()

    run = _longest_run(tokens)
    word_pen = 0.0
    if run > config.word_run_limit:
        word_pen = min(config.repetition_cap, config.word_run_step * (run - config.word_run_limit))

    n = config.phrase_length
    phrase_counts = Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
    repeated = sum(1 for c in phrase_counts.values() if c >= 2)
    phrase_pen = min(config.repetition_cap, config.phrase_step * repeated)

    g = config.diversity_ngram
    grams = [tuple(tokens[i : i + g]) for i in range(len(tokens) - g + 1)]
    ngram_pen = 0.0
    if grams:
        ratio = len(set(grams)) / len(grams)
        if ratio < config.diversity_floor:
            ngram_pen = min(
                config.repetition_cap,
                config.repetition_cap * (config.diversity_floor - ratio) / config.diversity_floor,
            )

    return RepetitionBreakdown(word_pen, phrase_pen, ngram_pen)


def total_reward(
    parsed: ParsedResponse,
    accuracy: AccuracyResult | None,
    stage: Stage,
    config: ShapingConfig = DEFAULT_SHAPING,
    parse_error: str | None = None,
) -> ScoredSample:
    """Compose the final sample score from its parts.

    `accuracy` is None when there was nothing scoreable: missing span,
    refusal, or a grammar failure (pass the failed rule as parse_error).
    """
    refusal = detect_refusal(parsed.answer_text)
    parse_ok = accuracy is not None

    r_acc = accuracy.r_acc if accuracy else 0.0
    r_fmt = format_bonus(parsed, parse_ok, config)
    r_tags = tag_bonus(parsed, config)
    p_no_event = no_event_penalty(refusal, stage, config)

    p_len = length_penalty(parsed.token_count, config)
    rep = repetition_penalty(parsed.raw, config)
    p_len_rep = max(p_len, rep.total)

    diagnostics: dict[str, Any] = {
        "refusal": refusal.value,
        "parse_error": parse_error,
        "token_count": parsed.token_count,
        "length_penalty": p_len,
        "repetition_penalty": rep.total,
        "repetition": {
            "word_run": rep.word_run,
            "phrase": rep.phrase,
            "ngram_diversity": rep.ngram_diversity,
        },
        "tag_counts": list(parsed.tags.as_tuple()),
        "accuracy_factors": dict(accuracy.factors) if accuracy else None,
    }
    total = r_acc + r_fmt + r_tags - p_no_event - p_len_rep
    return ScoredSample(
        r_acc=r_acc,
        r_ans_fmt=r_fmt,
        r_tags=r_tags,
        p_no_event=p_no_event,
        p_len_rep=p_len_rep,
        total=total,
        diagnostics=diagnostics,
    )
