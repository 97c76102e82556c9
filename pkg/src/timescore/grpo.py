"""Group-relative advantage numerics and the clipped surrogate objective.

Pure float functions over one rollout group; no tensors, no framework. The
KL penalty uses the plain sample mean of (logp_current - logp_reference).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

DEFAULT_EPSILON = 0.2
DEFAULT_BETA = 0.001
DEFAULT_GROUP_SIZE = 5


@dataclass(frozen=True)
class RolloutSample:
    """One response in a group: its reward and both policies' log-probs."""

    reward: float
    logprob_current: float
    logprob_reference: float


@dataclass(frozen=True)
class RolloutGroup:
    prompt_id: str
    samples: tuple[RolloutSample, ...]

    def __post_init__(self) -> None:
        if len(self.samples) < 2:
            raise ValueError(f"a rollout group needs at least 2 samples, got {len(self.samples)}")


def group_advantages(rewards: Sequence[float]) -> list[float]:
    """Center rewards on the group mean. Needs at least 2 rewards.

    The result always sums to zero (up to float error); a constant shift of
    every reward leaves it unchanged.
    """
    if len(rewards) < 2:
        raise ValueError(f"need at least 2 rewards for a group baseline, got {len(rewards)}")
    mean = sum(rewards) / len(rewards)
    return [r - mean for r in rewards]


def clipped_term(ratio: float, advantage: float, epsilon: float = DEFAULT_EPSILON) -> float:
    """min(ratio * A, clip(ratio, 1-eps, 1+eps) * A)."""
    if ratio <= 0:
        raise ValueError(f"probability ratio must be positive: {ratio}")
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must be in (0, 1): {epsilon}")
    clipped = min(max(ratio, 1.0 - epsilon), 1.0 + epsilon)
    return min(ratio * advantage, clipped * advantage)


def kl_penalty_estimate(logp_current: Sequence[float], logp_reference: Sequence[float]) -> float:
    """Mean log-prob gap between current and reference policies."""
    if len(logp_current) != len(logp_reference):
        raise ValueError(
            f"log-prob lengths differ: {len(logp_current)} vs {len(logp_reference)}"
        )
    if not logp_current:
        raise ValueError("cannot estimate KL from zero samples")
    return sum(c - r for c, r in zip(logp_current, logp_reference)) / len(logp_current)


def objective_value(
    group: RolloutGroup,
    epsilon: float = DEFAULT_EPSILON,
    beta: float = DEFAULT_BETA,
) -> float:
    """Mean clipped surrogate over the group minus beta times the KL estimate."""
    advantages = group_advantages([s.reward for s in group.samples])
    surrogate = 0.0
    for sample, adv in zip(group.samples, advantages):
        ratio = math.exp(sample.logprob_current - sample.logprob_reference)
        surrogate += clipped_term(ratio, adv, epsilon)
    surrogate /= len(group.samples)
    kl = kl_penalty_estimate(
        [s.logprob_current for s in group.samples],
        [s.logprob_reference for s in group.samples],
    )
    return surrogate - beta * kl
