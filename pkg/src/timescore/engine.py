"""Batch scoring pipeline: record + response text in, scored rows out.

Row failures (bad stage for the task, hard sample in phase one) become
error rows, never batch aborts. The output dicts here are the canonical
wire shape; the CLI serializes them untouched, so any client speaking to
the CLI sees exactly these field names.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable

from .accuracy import AlphaPolicy, score_accuracy
from .config import DEFAULT_CONFIG, EngineConfig
from .curriculum import CurriculumState, Phase, alpha_policy_for
from .parsing import FormatError, RefusalStatus, detect_refusal, extract_sections, parse_answer
from .records import EVENT_COUNT, BenchRecord, ScoredSample, Stage, TaskKind
from .shaping import total_reward


def stage_for_task(task: TaskKind) -> Stage:
    """Future prediction is the stage-two task; everything else is stage one."""
    return Stage.STAGE2 if task is TaskKind.PREDICTION else Stage.STAGE1


@dataclass(frozen=True)
class ScoreRequest:
    """One row of scoring work. `stage=None` means derive it from the task."""

    record: BenchRecord
    response: str
    phase: Phase = Phase.EVAL
    step: int = 0
    stage: Stage | None = None
    group_id: str | None = None
    row_id: str | None = None


def _resolve_stage(record: BenchRecord, requested: Stage | None) -> Stage:
    derived = stage_for_task(record.task)
    if requested is not None and requested is not derived:
        raise ValueError(
            f"{record.task.value} rows score in {derived.value}, not {requested.value}"
        )
    return derived


def score_response(
    record: BenchRecord,
    response: str,
    phase: Phase = Phase.EVAL,
    step: int = 0,
    stage: Stage | None = None,
    config: EngineConfig = DEFAULT_CONFIG,
) -> ScoredSample:
    """Score one response against its record under the given curriculum point.

    Raises ValueError when the row itself is unscoreable: a stage that
    contradicts the task, or a sample phase one does not admit. Grammar
    and refusal problems are not errors; they score through the shaping
    penalties with r_acc = 0.
    """
    resolved_stage = _resolve_stage(record, stage)
    if phase is Phase.P1 and record.task is not TaskKind.INFERENCE:
        raise ValueError(f"phase one admits only inference rows, got {record.task.value}")

    state = CurriculumState(
        phase=phase,
        step_in_phase=step,
        alpha_start=config.curriculum.alpha_start,
        alpha_target=config.curriculum.alpha_target,
        transition_steps=config.curriculum.transition_steps,
    )
    slots = EVENT_COUNT[record.task]
    if record.task is TaskKind.PREDICTION:
        # The prediction kernel pins its own rate; policy is a placeholder.
        policy = AlphaPolicy.strict_eval(slots)
    else:
        policy = alpha_policy_for(record.difficulty, slots, state)

    parsed = extract_sections(response)
    refusal = detect_refusal(parsed.answer_text)

    accuracy = None
    parse_error = None
    if refusal is RefusalStatus.NONE and parsed.answer_text is not None:
        try:
            answer = parse_answer(record.task, parsed.answer_text)
        except FormatError as exc:
            parse_error = exc.rule
        else:
            accuracy = score_accuracy(
                record.task, answer, record.ground_truth, policy, config.kernels
            )

    sample = total_reward(parsed, accuracy, resolved_stage, config.shaping, parse_error)
    sample.diagnostics.update(
        {
            "stage": resolved_stage.value,
            "phase": phase.value,
            "step": step,
            "difficulty": record.difficulty.value,
            "alphas": list(policy.alphas),
        }
    )
    return sample


def score_request(request: ScoreRequest, config: EngineConfig = DEFAULT_CONFIG) -> dict[str, Any]:
    """Score one request into the canonical output row (success or error)."""
    row_id = request.row_id if request.row_id is not None else request.record.id
    base: dict[str, Any] = {"id": row_id, "group_id": request.group_id}
    try:
        sample = score_response(
            record=request.record,
            response=request.response,
            phase=request.phase,
            step=request.step,
            stage=request.stage,
            config=config,
        )
    except ValueError as exc:
        base["error"] = str(exc)
        return base
    base["task"] = request.record.task.value
    base["stage"] = stage_for_task(request.record.task).value
    base["score"] = sample.to_dict()
    return base


def score_batch(
    requests: Iterable[ScoreRequest], config: EngineConfig = DEFAULT_CONFIG
) -> list[dict[str, Any]]:
    """Score every request, preserving order. Bad rows come back as error rows."""
    return [score_request(req, config) for req in requests]
