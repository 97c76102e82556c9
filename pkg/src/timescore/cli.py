"""Command-line interface.

Subcommands cover the whole engine: batch scoring, group advantages and
objectives, difficulty stratification, the curriculum alpha table, dataset
validation and filtering, desk distribution, and generation plausibility
reports.

Conventions: line-delimited JSON in and out, `-` for stdin/stdout, exit 0
when everything succeeded, 1 on fatal problems (unreadable input, bad
flags), 2 when the run finished but some rows failed. Data goes to stdout;
summaries and warnings go to stderr. Output row order always matches input
row order, whatever --workers says.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import multiprocessing
import os
import sys
from typing import IO, Any, Iterable, Iterator

from . import __version__
from .config import DEFAULT_CONFIG, load_config
from .curriculum import CurriculumState, Phase, PhasePlan, alpha_for, stratify
from .dataset import (
    DEFAULT_DESK_TARGETS,
    LineError,
    build_manifest,
    desk_distribution,
    read_records,
    record_from_json,
    split_filter,
    write_records,
)
from .engine import ScoreRequest, score_request
from .geneval import (
    HashedBagOfWordsEmbedder,
    HttpEmbeddingProvider,
    load_generated_items,
    load_real_by_month,
    monthly_report,
)
from .grpo import RolloutGroup, RolloutSample, group_advantages, kl_penalty_estimate, objective_value
from .records import DateYM, Difficulty, Split, Stage, validate_record

ENDPOINT_ENV = "TIMESCORE_EMBED_ENDPOINT"
_CHUNK = 256


def _dumps(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


@contextlib.contextmanager
def _open_in(path: str) -> Iterator[IO[str]]:
    if path == "-":
        yield sys.stdin
    else:
        with open(path, "r", encoding="utf-8") as fh:
            yield fh


@contextlib.contextmanager
def _open_out(path: str) -> Iterator[IO[str]]:
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


# ---------------------------------------------------------------- score

# Per-process scoring state; the pool initializer fills it in each worker.
_STATE: dict[str, Any] = {}


def _init_score_state(
    records_path: str | None, config_path: str | None, phase_s: str, step: int, stage_s: str | None
) -> None:
    records = {}
    if records_path:
        errors: list[LineError] = []
        for record in read_records(records_path, errors):
            if record.id in records:
                raise SystemExit(f"duplicate record id {record.id!r} in {records_path}")
            records[record.id] = record
        _STATE["record_errors"] = errors
    _STATE["records"] = records
    _STATE["config"] = load_config(config_path)
    _STATE["phase"] = Phase(phase_s)
    _STATE["step"] = step
    _STATE["stage"] = Stage(stage_s) if stage_s else None


def _request_from_row(obj: dict) -> ScoreRequest:
    if not isinstance(obj, dict):
        raise ValueError("row must be a JSON object")
    if "response" not in obj or not isinstance(obj["response"], str):
        raise ValueError("row needs a string 'response'")

    if "record" in obj:
        record = record_from_json(obj["record"])
        violations = validate_record(record)
        if violations:
            raise ValueError("; ".join(violations))
    elif "record_id" in obj:
        record = _STATE["records"].get(str(obj["record_id"]))
        if record is None:
            raise ValueError(f"unknown record_id {obj['record_id']!r}")
    else:
        raise ValueError("row needs 'record' or 'record_id'")

    phase = Phase(str(obj["phase"])) if "phase" in obj else _STATE["phase"]
    stage = Stage(str(obj["stage"])) if "stage" in obj else _STATE["stage"]
    step = obj.get("step", _STATE["step"])
    if not isinstance(step, int) or isinstance(step, bool) or step < 0:
        raise ValueError(f"step must be a non-negative int, got {step!r}")

    row_id = str(obj["id"]) if "id" in obj else None
    group_id = str(obj["group_id"]) if obj.get("group_id") is not None else None
    return ScoreRequest(
        record=record,
        response=obj["response"],
        phase=phase,
        step=step,
        stage=stage,
        group_id=group_id,
        row_id=row_id,
    )


def _score_lines(
    numbered: list[tuple[int, str]],
) -> tuple[list[str], int, int, float, dict[str, list[float]]]:
    """Score raw input lines.

    Returns (output lines, scored, errors, total sum, per-task [r_acc sum, count]).
    """
    out: list[str] = []
    scored = 0
    errored = 0
    total_sum = 0.0
    task_acc: dict[str, list[float]] = {}
    for line_no, line in numbered:
        row_id = None
        group_id = None
        try:
            obj = json.loads(line)
            if isinstance(obj, dict):
                row_id = str(obj["id"]) if "id" in obj else None
                group_id = str(obj["group_id"]) if obj.get("group_id") is not None else None
            request = _request_from_row(obj)
        except json.JSONDecodeError as exc:
            out.append(_dumps({"id": row_id, "group_id": group_id, "line": line_no, "error": f"bad JSON: {exc.msg}"}))
            errored += 1
            continue
        except ValueError as exc:
            out.append(_dumps({"id": row_id, "group_id": group_id, "line": line_no, "error": str(exc)}))
            errored += 1
            continue
        result = score_request(request, _STATE["config"])
        if "error" in result:
            out.append(
                _dumps(
                    {
                        "id": result["id"],
                        "group_id": result["group_id"],
                        "line": line_no,
                        "error": result["error"],
                    }
                )
            )
            errored += 1
        else:
            out.append(_dumps(result))
            scored += 1
            total_sum += result["score"]["total"]
            bucket = task_acc.setdefault(result["task"], [0.0, 0.0])
            bucket[0] += result["score"]["r_acc"]
            bucket[1] += 1
    return out, scored, errored, total_sum, task_acc


def _numbered_chunks(fh: IO[str], size: int) -> Iterator[list[tuple[int, str]]]:
    chunk: list[tuple[int, str]] = []
    for line_no, line in enumerate(fh, start=1):
        if not line.strip():
            continue
        chunk.append((line_no, line))
        if len(chunk) >= size:
            yield chunk
            chunk = []
    if chunk:
        yield chunk


def cmd_score(args: argparse.Namespace) -> int:
    init_args = (args.records, args.config, args.phase, args.step, args.stage)
    # Initialize in the parent too: fails fast on bad records/config, and
    # forked workers inherit the state for free.
    _init_score_state(*init_args)
    for err in _STATE.get("record_errors", []):
        print(f"records line {err.line}: {err.message}", file=sys.stderr)

    scored = 0
    errored = 0
    total_sum = 0.0
    task_acc: dict[str, list[float]] = {}

    def _absorb(result: tuple) -> None:
        nonlocal scored, errored, total_sum
        lines, s, e, t, tasks = result
        for line in lines:
            fout.write(line + "\n")
        scored += s
        errored += e
        total_sum += t
        for task, (acc_sum, count) in tasks.items():
            bucket = task_acc.setdefault(task, [0.0, 0.0])
            bucket[0] += acc_sum
            bucket[1] += count

    with _open_in(args.rows) as fin, _open_out(args.out) as fout:
        chunks = _numbered_chunks(fin, _CHUNK)
        if args.workers > 1:
            with multiprocessing.Pool(
                processes=args.workers, initializer=_init_score_state, initargs=init_args
            ) as pool:
                results: Iterable = pool.imap(_score_lines, chunks)
                for result in results:
                    _absorb(result)
        else:
            for chunk in chunks:
                _absorb(_score_lines(chunk))

    summary = {
        "rows": scored + errored,
        "scored": scored,
        "errors": errored,
        "mean_total": (total_sum / scored) if scored else None,
        "mean_r_acc": {
            task: task_acc[task][0] / task_acc[task][1] for task in sorted(task_acc)
        },
        "config_hash": _STATE["config"].resolved_hash(),
    }
    print(_dumps(summary), file=sys.stderr)
    return 2 if errored else 0


# ---------------------------------------------------------------- advantage

def _dig(obj: Any, dotted: str) -> Any:
    cur = obj
    for part in dotted.split("."):
        if not isinstance(cur, dict) or part not in cur:
            raise ValueError(f"row has no field {dotted!r}")
        cur = cur[part]
    return cur


def cmd_advantage(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    group_size = args.group_size if args.group_size is not None else config.grpo.group_size

    # (kind, payload) per input line; joined rows resolve after a full read.
    entries: list[tuple[str, Any]] = []
    groups: dict[str, dict[str, list]] = {}
    failed = 0

    with _open_in(args.rows) as fin:
        for line_no, line in enumerate(fin, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                entries.append(("done", _dumps({"line": line_no, "error": f"bad JSON: {exc.msg}"})))
                failed += 1
                continue
            if isinstance(obj, dict) and "rewards" in obj:
                # Self-contained group on one line.
                try:
                    rewards = [float(r) for r in obj["rewards"]]
                    if len(rewards) != group_size and not args.ragged:
                        raise ValueError(
                            f"group has {len(rewards)} rewards, expected {group_size}"
                            " (pass --ragged to allow)"
                        )
                    adv = group_advantages(rewards)
                except (TypeError, ValueError) as exc:
                    entries.append(("done", _dumps({"group_id": obj.get("group_id"), "line": line_no, "error": str(exc)})))
                    failed += 1
                    continue
                entries.append(
                    ("done", _dumps({"group_id": obj.get("group_id"), "rewards": rewards, "advantages": adv}))
                )
                continue
            # Scored rows joined by group_id; advantage appended per row.
            if not isinstance(obj, dict) or obj.get("group_id") is None:
                entries.append(("done", _dumps({"line": line_no, "error": "row has no group_id"})))
                failed += 1
                continue
            gid = str(obj["group_id"])
            bucket = groups.setdefault(gid, {"rewards": [], "unscored": []})
            slot = len(bucket["rewards"])
            if "error" in obj:
                bucket["unscored"].append(obj.get("id"))
                entries.append(("member", (gid, None, obj)))
                continue
            try:
                reward = float(_dig(obj, args.reward_field))
            except (TypeError, ValueError):
                bucket["unscored"].append(obj.get("id"))
                entries.append(("member", (gid, None, obj)))
                continue
            bucket["rewards"].append(reward)
            entries.append(("member", (gid, slot, obj)))

    resolved: dict[str, list[float]] = {}
    group_error: dict[str, str] = {}
    ragged_ids: list[str] = []
    for gid, bucket in groups.items():
        if bucket["unscored"]:
            group_error[gid] = f"group contains {len(bucket['unscored'])} unscored rows"
            continue
        count = len(bucket["rewards"])
        if count != group_size and not args.ragged:
            group_error[gid] = f"group has {count} rows, expected {group_size} (pass --ragged to allow)"
            ragged_ids.append(gid)
            continue
        try:
            resolved[gid] = group_advantages(bucket["rewards"])
        except ValueError as exc:
            group_error[gid] = str(exc)
    failed += len(group_error)

    with _open_out(args.out) as fout:
        for kind, payload in entries:
            if kind == "done":
                fout.write(payload + "\n")
                continue
            gid, slot, obj = payload
            out_row = dict(obj)
            if gid in group_error:
                out_row["group_error"] = group_error[gid]
            else:
                out_row["advantage"] = resolved[gid][slot]
            fout.write(_dumps(out_row) + "\n")

    if ragged_ids:
        print(f"ragged groups: {', '.join(ragged_ids)}", file=sys.stderr)
    return 2 if failed else 0


def cmd_objective(args: argparse.Namespace) -> int:
    failed = 0
    with _open_in(args.rows) as fin, _open_out(args.out) as fout:
        for line_no, line in enumerate(fin, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                samples = tuple(
                    RolloutSample(
                        reward=float(s["reward"]),
                        logprob_current=float(s["logprob_current"]),
                        logprob_reference=float(s["logprob_reference"]),
                    )
                    for s in obj["samples"]
                )
                group = RolloutGroup(prompt_id=str(obj.get("group_id", line_no)), samples=samples)
                value = objective_value(group, epsilon=args.epsilon, beta=args.beta)
                kl = kl_penalty_estimate(
                    [s.logprob_current for s in samples],
                    [s.logprob_reference for s in samples],
                )
                adv = group_advantages([s.reward for s in samples])
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                fout.write(_dumps({"line": line_no, "error": str(exc)}) + "\n")
                failed += 1
                continue
            fout.write(
                _dumps(
                    {
                        "group_id": obj.get("group_id"),
                        "objective": value,
                        "kl": kl,
                        "advantages": adv,
                    }
                )
                + "\n"
            )
    return 2 if failed else 0


# ---------------------------------------------------------------- curriculum

def cmd_curriculum(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    cc = config.curriculum
    if args.plan:
        plan = PhasePlan(cc.p1_steps, cc.p2_steps, cc.p3_steps, cc.stage2_steps)
        print(_dumps({"segments": plan.rows(), "total_steps": plan.total_steps()}))
        return 0
    state = CurriculumState(
        phase=Phase(args.phase),
        step_in_phase=args.step,
        alpha_start=cc.alpha_start,
        alpha_target=cc.alpha_target,
        transition_steps=cc.transition_steps,
    )
    alphas: dict[str, float | None] = {"easy": alpha_for(Difficulty.EASY, state)}
    note = None
    try:
        alphas["normal_hard"] = alpha_for(Difficulty.NORMAL_HARD, state)
    except ValueError as exc:
        alphas["normal_hard"] = None
        note = str(exc)
    out = {"phase": args.phase, "step": args.step, "alphas": alphas}
    if note:
        out["note"] = note
    print(_dumps(out))
    return 0


def cmd_stratify(args: argparse.Namespace) -> int:
    failed = 0
    with _open_in(args.rows) as fin, _open_out(args.out) as fout:
        for line_no, line in enumerate(fin, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                delta = obj["baseline_delta_months"]
                if not isinstance(delta, int) or isinstance(delta, bool):
                    raise ValueError(f"baseline_delta_months must be an int, got {delta!r}")
                difficulty = stratify(delta, args.easy_threshold)
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                fout.write(_dumps({"line": line_no, "error": str(exc)}) + "\n")
                failed += 1
                continue
            fout.write(_dumps({"id": obj.get("id"), "difficulty": difficulty.value}) + "\n")
    return 2 if failed else 0


# ---------------------------------------------------------------- dataset

def cmd_validate(args: argparse.Namespace) -> int:
    errors: list[LineError] = []
    with _open_in(args.records) as fin:
        manifest = build_manifest(read_records(fin, errors))
    manifest.error_count = len(errors)
    print(json.dumps(manifest.to_json_dict(), ensure_ascii=False, indent=2))
    for err in errors:
        print(f"line {err.line}: {err.message}", file=sys.stderr)
    return 2 if errors else 0


def cmd_desks(args: argparse.Namespace) -> int:
    targets = DEFAULT_DESK_TARGETS
    if args.targets:
        with open(args.targets, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        targets = {str(k): float(v) for k, v in raw.items()}
    errors: list[LineError] = []
    with _open_in(args.records) as fin:
        rows = desk_distribution(read_records(fin, errors), targets)
    if args.format == "csv":
        print("desk,count,share_pct,target_pct,delta_pct")
        for r in rows:
            target = "" if r.target_pct is None else f"{r.target_pct:.4f}"
            delta = "" if r.delta_pct is None else f"{r.delta_pct:.4f}"
            print(f"{r.desk},{r.count},{r.share_pct:.4f},{target},{delta}")
    else:
        print(
            _dumps(
                [
                    {
                        "desk": r.desk,
                        "count": r.count,
                        "share_pct": r.share_pct,
                        "target_pct": r.target_pct,
                        "delta_pct": r.delta_pct,
                    }
                    for r in rows
                ]
            )
        )
    for err in errors:
        print(f"line {err.line}: {err.message}", file=sys.stderr)
    return 2 if errors else 0


def cmd_filter(args: argparse.Namespace) -> int:
    split = Split(args.split) if args.split else None
    period_range = None
    if args.period_from or args.period_to:
        if not (args.period_from and args.period_to):
            print("--from and --to must be given together", file=sys.stderr)
            return 1
        period_range = (DateYM.parse(args.period_from), DateYM.parse(args.period_to))
    errors: list[LineError] = []
    with _open_in(args.records) as fin, _open_out(args.out) as fout:
        kept = write_records(split_filter(read_records(fin, errors), split, period_range), fout)
    print(_dumps({"kept": kept, "read_errors": len(errors)}), file=sys.stderr)
    for err in errors:
        print(f"line {err.line}: {err.message}", file=sys.stderr)
    return 2 if errors else 0


# ---------------------------------------------------------------- geneval

def cmd_geneval(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    gc = config.geneval
    endpoint = args.endpoint or os.environ.get(ENDPOINT_ENV) or gc.endpoint
    if endpoint:
        provider = HttpEmbeddingProvider(
            endpoint, dim=gc.dim, batch_size=gc.batch_size, max_in_flight=gc.max_in_flight
        )
    else:
        provider = HashedBagOfWordsEmbedder(dim=gc.dim)

    with open(args.generated, "r", encoding="utf-8") as fh:
        items = load_generated_items(json.load(fh))
    with open(args.real, "r", encoding="utf-8") as fh:
        real = load_real_by_month(json.load(fh))

    report = monthly_report(items, real, provider, n_diverse=args.n_diverse or gc.n_diverse)
    with _open_out(args.out) as fout:
        if args.format == "csv":
            fout.write(report.to_csv())
        elif args.format == "text":
            fout.write(report.summary_text() + "\n")
        else:
            fout.write(_dumps(report.to_json_dict()) + "\n")
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="timescore",
        description="Batch scoring for temporal-reasoning rollouts.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score response rows against records")
    p.add_argument("rows", help="JSONL rows file, - for stdin")
    p.add_argument("--records", help="JSONL records file for record_id joins")
    p.add_argument("--out", default="-", help="output path, - for stdout")
    p.add_argument("--config", help="engine config JSON")
    p.add_argument("--phase", default="eval", choices=[ph.value for ph in Phase])
    p.add_argument("--step", type=int, default=0)
    p.add_argument("--stage", choices=[s.value for s in Stage], help="assert stage (default: derive from task)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("advantage", help="group-relative advantages from scored rows")
    p.add_argument("rows", help="JSONL scored rows or {rewards:[...]} groups, - for stdin")
    p.add_argument("--out", default="-")
    p.add_argument("--reward-field", default="score.total", help="dotted path to the reward")
    p.add_argument("--group-size", type=int, default=None, help="required rows per group")
    p.add_argument("--ragged", action="store_true", help="allow groups of any size >= 2")
    p.add_argument("--config", default=None, help="engine config JSON path")
    p.set_defaults(func=cmd_advantage)

    p = sub.add_parser("objective", help="clipped surrogate objective per rollout group")
    p.add_argument("rows", help="JSONL groups with samples, - for stdin")
    p.add_argument("--out", default="-")
    p.add_argument("--epsilon", type=float, default=DEFAULT_CONFIG.grpo.epsilon)
    p.add_argument("--beta", type=float, default=DEFAULT_CONFIG.grpo.beta)
    p.set_defaults(func=cmd_objective)

    p = sub.add_parser("curriculum", help="alpha schedule at a phase and step")
    p.add_argument("--phase", default="eval", choices=[ph.value for ph in Phase])
    p.add_argument("--step", type=int, default=0)
    p.add_argument("--plan", action="store_true", help="print the step budget per phase")
    p.add_argument("--config", help="engine config JSON")
    p.set_defaults(func=cmd_curriculum)

    p = sub.add_parser("stratify", help="difficulty labels from baseline errors")
    p.add_argument("rows", help="JSONL with baseline_delta_months, - for stdin")
    p.add_argument("--out", default="-")
    p.add_argument("--easy-threshold", type=int, default=DEFAULT_CONFIG.curriculum.easy_threshold)
    p.set_defaults(func=cmd_stratify)

    p = sub.add_parser("validate", help="validate a dataset and print its manifest")
    p.add_argument("records", help="JSONL records file, - for stdin")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("desks", help="desk distribution against a target mix")
    p.add_argument("records", help="JSONL records file, - for stdin")
    p.add_argument("--targets", help="JSON {desk: percent}; default built-in mix")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_desks)

    p = sub.add_parser("filter", help="filter records by split and period window")
    p.add_argument("records", help="JSONL records file, - for stdin")
    p.add_argument("--out", default="-")
    p.add_argument("--split", choices=[s.value for s in Split])
    p.add_argument("--from", dest="period_from", help="YYYY-MM inclusive")
    p.add_argument("--to", dest="period_to", help="YYYY-MM inclusive")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("geneval", help="plausibility report for generated news")
    p.add_argument("--generated", required=True, help="JSON array of generated items")
    p.add_argument("--real", required=True, help="JSON {YYYY-MM: [texts]}")
    p.add_argument("--out", default="-")
    p.add_argument("--endpoint", help=f"embedding endpoint (or ${ENDPOINT_ENV})")
    p.add_argument("--n-diverse", type=int, help="diverse picks per theme and month")
    p.add_argument("--format", choices=["json", "csv", "text"], default="json")
    p.add_argument("--config", help="engine config JSON")
    p.set_defaults(func=cmd_geneval)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
