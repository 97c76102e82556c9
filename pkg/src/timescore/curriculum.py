"""Difficulty stratification and the phase-driven alpha schedule.

The decay rate alpha is the single knob the curriculum turns: easy samples
always score at the strict rate, hard samples start gentler and tighten
linearly over the transition window of phase three.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .accuracy import AlphaPolicy
from .records import Difficulty


class Phase(enum.Enum):
    P1 = "p1"
    P2 = "p2"
    P3 = "p3"
    EVAL = "eval"


@dataclass(frozen=True)
class CurriculumState:
    """Where training sits: phase plus step count inside that phase."""

    phase: Phase
    step_in_phase: int = 0
    alpha_start: float = 0.07
    alpha_target: float = 0.1
    transition_steps: int = 50

    def __post_init__(self) -> None:
        if self.step_in_phase < 0:
            raise ValueError(f"step_in_phase must be >= 0: {self.step_in_phase}")
        if self.transition_steps <= 0:
            raise ValueError(f"transition_steps must be positive: {self.transition_steps}")
        if not self.alpha_start < self.alpha_target:
            raise ValueError(
                f"alpha_start {self.alpha_start} must sit below alpha_target {self.alpha_target}"
            )


def stratify(baseline_delta_months: int, easy_threshold: int = 3) -> Difficulty:
    """Label a sample by how close a baseline model already gets.

    Args:
        baseline_delta_months: month error of the reference baseline's answer.
        easy_threshold: largest error still counted as easy.
    """
    if baseline_delta_months < 0:
        raise ValueError(f"negative baseline error: {baseline_delta_months}")
    return Difficulty.EASY if baseline_delta_months <= easy_threshold else Difficulty.NORMAL_HARD


def alpha_for(difficulty: Difficulty, state: CurriculumState) -> float:
    """Decay rate for one sample under the current curriculum state.

    Easy samples and eval mode always get the strict target rate. Hard
    samples ramp: the gentle start rate through phase two, then a linear
    climb across the first `transition_steps` steps of phase three.
    Unlabeled samples are treated as hard.

    Raises:
        ValueError: hard samples in phase one, which admits only easy ones.
    """
    if state.phase is Phase.EVAL or difficulty is Difficulty.EASY:
        return state.alpha_target
    # Difficulty.UNSET scores as hard from here on.
    if state.phase is Phase.P1:
        raise ValueError("phase one admits only easy samples")
    if state.phase is Phase.P2:
        return state.alpha_start
    if state.step_in_phase >= state.transition_steps:
        return state.alpha_target
    frac = state.step_in_phase / state.transition_steps
    return state.alpha_start + (state.alpha_target - state.alpha_start) * frac


def alpha_policy_for(difficulty: Difficulty, slots: int, state: CurriculumState) -> AlphaPolicy:
    """AlphaPolicy with the same rate in every event slot."""
    if state.phase is Phase.EVAL:
        return AlphaPolicy.strict_eval(slots)
    return AlphaPolicy.uniform(alpha_for(difficulty, state), slots)


@dataclass(frozen=True)
class PhasePlan:
    """Step budget per phase, stage-two appended after the three stage-one phases."""

    p1_steps: int = 100
    p2_steps: int = 500
    p3_steps: int = 1000
    stage2_steps: int = 100

    def __post_init__(self) -> None:
        for name in ("p1_steps", "p2_steps", "p3_steps", "stage2_steps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def total_steps(self) -> int:
        return self.p1_steps + self.p2_steps + self.p3_steps + self.stage2_steps

    def rows(self) -> list[dict[str, int | str]]:
        return [
            {"segment": "p1", "steps": self.p1_steps},
            {"segment": "p2", "steps": self.p2_steps},
            {"segment": "p3", "steps": self.p3_steps},
            {"segment": "stage2", "steps": self.stage2_steps},
        ]
