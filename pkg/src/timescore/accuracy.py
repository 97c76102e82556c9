"""Accuracy reward kernels, one per task.

Every kernel maps (parsed answer, ground truth) to r_acc in [0, 1] through
exponential decay on month-level error, with task-specific structure bonuses
and multiplicative consistency factors. All coefficients live on
`KernelConfig`; the defaults are the trained values and changing them is a
config decision, not an edit here.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any

from .parsing import (
    CompletionAnswer,
    DifferenceAnswer,
    InferenceAnswer,
    OrderingAnswer,
    TaskAnswer,
    circular_month_distance,
)
from .records import DateYM, EntityKind, GroundTruth, TaskKind, month_distance

ALPHA_MIN = 0.05
ALPHA_MAX = 0.2


@dataclass(frozen=True)
class KernelConfig:
    diff_date_weight: float = 0.25
    diff_delta_weight: float = 0.5
    large_gap_threshold: int = 25
    large_gap_alpha: float = 0.05
    strict_alpha: float = 0.1
    incon_alpha: float = 0.1
    incon_alpha_large_gap: float = 0.05
    order_date_weight: float = 0.2
    order_rank_weight: float = 0.4
    # Consistency factor by number of date/order pair agreements (0..3).
    order_incon_factors: tuple[float, float, float, float] = (0.2, 0.4, 0.7, 1.0)
    order_diversity_penalty: float = 0.2
    completion_date_weight: float = 0.5
    completion_entity_weight: float = 0.5
    entity_decay_multiplier: float = 3.0
    # Year-entity error unit: False counts years, True counts months (x12).
    year_entity_in_months: bool = False

    def __post_init__(self) -> None:
        if len(self.order_incon_factors) != 4:
            raise ValueError("order_incon_factors needs exactly 4 entries")
        if self.large_gap_threshold < 1:
            raise ValueError("large_gap_threshold must be positive")


DEFAULT_KERNELS = KernelConfig()


class AlphaMode(enum.Enum):
    CURRICULUM = "curriculum"
    STRICT_EVAL = "strict_eval"


@dataclass(frozen=True)
class AlphaPolicy:
    """Per-event-slot decay rates plus the mode that produced them."""

    alphas: tuple[float, ...]
    mode: AlphaMode = AlphaMode.CURRICULUM

    def __post_init__(self) -> None:
        if not self.alphas:
            raise ValueError("AlphaPolicy needs at least one slot")
        for a in self.alphas:
            if not ALPHA_MIN <= a <= ALPHA_MAX:
                raise ValueError(f"alpha {a} outside [{ALPHA_MIN}, {ALPHA_MAX}]")
        if self.mode is AlphaMode.STRICT_EVAL and any(a != 0.1 for a in self.alphas):
            raise ValueError("strict-eval policy must hold alpha = 0.1 in every slot")

    @classmethod
    def strict_eval(cls, slots: int) -> AlphaPolicy:
        return cls(alphas=(0.1,) * slots, mode=AlphaMode.STRICT_EVAL)

    @classmethod
    def uniform(cls, alpha: float, slots: int) -> AlphaPolicy:
        return cls(alphas=(alpha,) * slots)

    def mixed(self) -> bool:
        return len(set(self.alphas)) > 1


@dataclass(frozen=True)
class AccuracyResult:
    """r_acc plus the factor breakdown that produced it."""

    r_acc: float
    factors: dict[str, Any] = field(default_factory=dict)


def date_reward(delta_months: int, alpha: float) -> float:
    """exp(-alpha * months of error). delta must be >= 0, alpha > 0."""
    if delta_months < 0:
        raise ValueError(f"negative month distance: {delta_months}")
    if alpha <= 0:
        raise ValueError(f"alpha must be positive: {alpha}")
    return math.exp(-alpha * delta_months)


def _slot_alpha(policy: AlphaPolicy, slot: int) -> float:
    if slot >= len(policy.alphas):
        raise ValueError(f"alpha policy has {len(policy.alphas)} slots, need slot {slot}")
    return policy.alphas[slot]


def score_inference(answer: InferenceAnswer, gt: GroundTruth, policy: AlphaPolicy) -> AccuracyResult:
    alpha = _slot_alpha(policy, 0)
    delta = month_distance(answer.date, gt.dates[0])
    r = date_reward(delta, alpha)
    return AccuracyResult(r, {"delta_months": delta, "alpha": alpha, "date_reward": r})


def score_prediction(
    answer: InferenceAnswer, gt: GroundTruth, config: KernelConfig = DEFAULT_KERNELS
) -> AccuracyResult:
    """Future prediction always scores at the strict rate; curriculum never softens it."""
    delta = month_distance(answer.date, gt.dates[0])
    r = date_reward(delta, config.strict_alpha)
    return AccuracyResult(r, {"delta_months": delta, "alpha": config.strict_alpha, "date_reward": r})


def score_difference(
    answer: DifferenceAnswer,
    gt: GroundTruth,
    policy: AlphaPolicy,
    config: KernelConfig = DEFAULT_KERNELS,
) -> AccuracyResult:
    a1 = _slot_alpha(policy, 0)
    a2 = _slot_alpha(policy, 1)
    d1 = month_distance(answer.date1, gt.dates[0])
    d2 = month_distance(answer.date2, gt.dates[1])
    r_d1 = date_reward(d1, a1)
    r_d2 = date_reward(d2, a2)

    # Big stated gaps get a gentler slope on the gap term and on consistency.
    large_gap = answer.delta_months >= config.large_gap_threshold
    if large_gap:
        alpha_delta = config.large_gap_alpha
        alpha_incon = config.incon_alpha_large_gap
    else:
        alpha_delta = config.strict_alpha if policy.mode is AlphaMode.STRICT_EVAL else (a1 + a2) / 2
        alpha_incon = config.incon_alpha

    assert gt.delta_months is not None
    delta_err = abs(answer.delta_months - gt.delta_months)
    r_delta = math.exp(-alpha_delta * delta_err)

    # Consistency: stated gap vs the gap implied by the two stated dates.
    implied = month_distance(answer.date2, answer.date1)
    incon = abs(implied - answer.delta_months)
    p_incon = math.exp(-alpha_incon * incon)

    r_acc = (
        config.diff_date_weight * r_d1
        + config.diff_date_weight * r_d2
        + config.diff_delta_weight * r_delta
    ) * p_incon
    return AccuracyResult(
        r_acc,
        {
            "date_rewards": [r_d1, r_d2],
            "alphas": [a1, a2],
            "delta_error": delta_err,
            "alpha_delta": alpha_delta,
            "delta_reward": r_delta,
            "implied_delta": implied,
            "inconsistency": incon,
            "alpha_incon": alpha_incon,
            "consistency_factor": p_incon,
            "large_gap": large_gap,
            "mixed_alpha": policy.mixed(),
        },
    )


def _rank_of(order: tuple[int, int, int]) -> dict[int, int]:
    # rank_of[event] = position of that event in the stated sequence
    return {event: pos for pos, event in enumerate(order)}


_EVENT_PAIRS = ((1, 2), (1, 3), (2, 3))


def order_pair_agreement(pred: tuple[int, int, int], gt: tuple[int, int, int]) -> int:
    """Number of event pairs (of 3) whose relative order matches."""
    rp, rg = _rank_of(pred), _rank_of(gt)
    return sum(1 for a, b in _EVENT_PAIRS if (rp[a] < rp[b]) == (rg[a] < rg[b]))


def ordering_consistency_agreements(
    dates: tuple[DateYM, DateYM, DateYM], order: tuple[int, int, int]
) -> int:
    """Pairs where the stated sequence agrees with the stated dates.

    Equal dates cannot contradict any sequence, so they count as agreement.
    """
    rank = _rank_of(order)
    agree = 0
    for a, b in _EVENT_PAIRS:
        da, db = dates[a - 1], dates[b - 1]
        if da == db or (da < db) == (rank[a] < rank[b]):
            agree += 1
    return agree


def ordering_diversity_factor(
    dates: tuple[DateYM, DateYM, DateYM],
    order: tuple[int, int, int],
    config: KernelConfig = DEFAULT_KERNELS,
) -> float:
    """Penalize degenerate shapes: all-equal dates, or a lazy +1,+1 staircase with order 1-2-3."""
    m1, m2, m3 = (d.total_months() for d in dates)
    if m1 == m2 == m3:
        return config.order_diversity_penalty
    if order == (1, 2, 3) and m2 - m1 == 1 and m3 - m2 == 1:
        return config.order_diversity_penalty
    return 1.0


def score_ordering(
    answer: OrderingAnswer,
    gt: GroundTruth,
    policy: AlphaPolicy,
    config: KernelConfig = DEFAULT_KERNELS,
) -> AccuracyResult:
    assert gt.order is not None
    date_rewards = []
    deltas = []
    for slot in range(3):
        delta = month_distance(answer.dates[slot], gt.dates[slot])
        deltas.append(delta)
        date_rewards.append(date_reward(delta, _slot_alpha(policy, slot)))

    agree_gt = order_pair_agreement(answer.order, gt.order)
    r_order = agree_gt / 3.0

    agree_self = ordering_consistency_agreements(answer.dates, answer.order)
    p_incon = config.order_incon_factors[agree_self]
    p_div = ordering_diversity_factor(answer.dates, answer.order, config)

    r_acc = (
        config.order_date_weight * sum(date_rewards) + config.order_rank_weight * r_order
    ) * p_incon * p_div
    return AccuracyResult(
        r_acc,
        {
            "date_rewards": date_rewards,
            "deltas": deltas,
            "alphas": list(policy.alphas[:3]),
            "correct_pairs": agree_gt,
            "order_reward": r_order,
            "self_agreements": agree_self,
            "consistency_factor": p_incon,
            "diversity_factor": p_div,
            "mixed_alpha": policy.mixed(),
        },
    )


def entity_reward(
    predicted, gt_entity, alpha: float, config: KernelConfig = DEFAULT_KERNELS
) -> tuple[float, dict[str, Any]]:
    """Decay on entity error; kind mismatch scores zero outright."""
    if predicted.kind is not gt_entity.kind:
        return 0.0, {"entity_kind_mismatch": True, "entity_error": None}
    if gt_entity.kind is EntityKind.MONTH:
        err = circular_month_distance(predicted.value, gt_entity.value)
    else:
        err = abs(predicted.value - gt_entity.value)
        if config.year_entity_in_months:
            err *= 12
    r = math.exp(-config.entity_decay_multiplier * alpha * err)
    return r, {"entity_kind_mismatch": False, "entity_error": err}


def score_completion(
    answer: CompletionAnswer,
    gt: GroundTruth,
    policy: AlphaPolicy,
    config: KernelConfig = DEFAULT_KERNELS,
) -> AccuracyResult:
    assert gt.entity is not None
    alpha = _slot_alpha(policy, 0)
    delta = month_distance(answer.date, gt.dates[0])
    r_date = date_reward(delta, alpha)
    r_ent, ent_diag = entity_reward(answer.entity, gt.entity, alpha, config)
    r_acc = config.completion_date_weight * r_date + config.completion_entity_weight * r_ent
    factors: dict[str, Any] = {
        "delta_months": delta,
        "alpha": alpha,
        "date_reward": r_date,
        "entity_reward": r_ent,
    }
    factors.update(ent_diag)
    return AccuracyResult(r_acc, factors)


def score_accuracy(
    task: TaskKind,
    answer: TaskAnswer,
    gt: GroundTruth,
    policy: AlphaPolicy,
    config: KernelConfig = DEFAULT_KERNELS,
) -> AccuracyResult:
    """Dispatch to the task kernel. Answer type must match the task."""
    if task is TaskKind.INFERENCE:
        if not isinstance(answer, InferenceAnswer):
            raise TypeError(f"inference task got {type(answer).__name__}")
        return score_inference(answer, gt, policy)
    if task is TaskKind.PREDICTION:
        if not isinstance(answer, InferenceAnswer):
            raise TypeError(f"prediction task got {type(answer).__name__}")
        return score_prediction(answer, gt, config)
    if task is TaskKind.DIFFERENCE:
        if not isinstance(answer, DifferenceAnswer):
            raise TypeError(f"difference task got {type(answer).__name__}")
        return score_difference(answer, gt, policy, config)
    if task is TaskKind.ORDERING:
        if not isinstance(answer, OrderingAnswer):
            raise TypeError(f"ordering task got {type(answer).__name__}")
        return score_ordering(answer, gt, policy, config)
    if task is TaskKind.COMPLETION:
        if not isinstance(answer, CompletionAnswer):
            raise TypeError(f"completion task got {type(answer).__name__}")
        return score_completion(answer, gt, policy, config)
    raise ValueError(f"unknown task {task!r}")
