"""timescore: batch scoring for temporal-reasoning RL rollouts.

Rule-based task rewards with consistency factors, answer-format shaping,
a curriculum-driven decay schedule, group-relative advantage numerics,
and plausibility reports for generated future news.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .accuracy import (
    AccuracyResult,
    AlphaMode,
    AlphaPolicy,
    KernelConfig,
    date_reward,
    score_accuracy,
)
from .config import DEFAULT_CONFIG, EngineConfig, load_config
from .curriculum import CurriculumState, Phase, PhasePlan, alpha_for, stratify
from .engine import ScoreRequest, score_batch, score_request, score_response, stage_for_task
from .grpo import RolloutGroup, RolloutSample, group_advantages, objective_value
from .parsing import (
    FormatError,
    ParsedResponse,
    RefusalStatus,
    detect_refusal,
    extract_sections,
    parse_answer,
    render_answer,
)
from .records import (
    BenchRecord,
    DateYM,
    Difficulty,
    EventText,
    GroundTruth,
    ScoredSample,
    Split,
    Stage,
    TaskKind,
    TimeEntity,
    month_distance,
    validate_record,
)
from .shaping import ShapingConfig, total_reward

__all__ = [
    "__version__",
    "AccuracyResult",
    "AlphaMode",
    "AlphaPolicy",
    "KernelConfig",
    "date_reward",
    "score_accuracy",
    "DEFAULT_CONFIG",
    "EngineConfig",
    "load_config",
    "CurriculumState",
    "Phase",
    "PhasePlan",
    "alpha_for",
    "stratify",
    "ScoreRequest",
    "score_batch",
    "score_request",
    "score_response",
    "stage_for_task",
    "RolloutGroup",
    "RolloutSample",
    "group_advantages",
    "objective_value",
    "FormatError",
    "ParsedResponse",
    "RefusalStatus",
    "detect_refusal",
    "extract_sections",
    "parse_answer",
    "render_answer",
    "BenchRecord",
    "DateYM",
    "Difficulty",
    "EventText",
    "GroundTruth",
    "ScoredSample",
    "Split",
    "Stage",
    "TaskKind",
    "TimeEntity",
    "month_distance",
    "validate_record",
    "ShapingConfig",
    "total_reward",
]
