from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"
RECORDS = str(DATA / "golden_records.jsonl")
REQUESTS = str(DATA / "golden_requests.jsonl")


def run_cli(*args: str, stdin: bytes | None = None) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "timescore", *args],
        input=stdin,
        capture_output=True,
    )


def test_version_flag():
    proc = run_cli("--version")
    assert proc.returncode == 0
    assert b"timescore" in proc.stdout


# ------------------------------------------------------------ score


def test_score_golden_corpus():
    proc = run_cli("score", REQUESTS, "--records", RECORDS)
    assert proc.returncode == 2  # two deliberate error rows
    lines = proc.stdout.decode().splitlines()
    assert len(lines) == 20
    rows = [json.loads(l) for l in lines]
    by_id = {r["id"]: r for r in rows}
    assert by_id["q01"]["score"]["total"] == pytest.approx(1.0048374180359596, abs=1e-12)
    assert by_id["q09"]["score"]["total"] == pytest.approx(1.0524187090179797, abs=1e-12)
    assert by_id["q11"]["score"]["total"] == pytest.approx(1.1, abs=1e-12)
    assert "error" in by_id["q18"] and by_id["q18"]["line"] == 18
    assert "error" in by_id["q19"]
    summary = json.loads(proc.stderr.decode().splitlines()[-1])
    assert summary["rows"] == 20
    assert summary["scored"] == 18
    assert summary["errors"] == 2
    assert summary["config_hash"]
    assert set(summary["mean_r_acc"]) == {
        "inference", "difference", "ordering", "completion", "prediction",
    }
    assert all(0.0 <= v <= 1.0 for v in summary["mean_r_acc"].values())


def test_score_output_ids_follow_input_order():
    proc = run_cli("score", REQUESTS, "--records", RECORDS)
    ids = [json.loads(l)["id"] for l in proc.stdout.decode().splitlines()]
    assert ids == [f"q{i:02d}" for i in range(1, 21)]


def test_score_is_byte_deterministic():
    a = run_cli("score", REQUESTS, "--records", RECORDS)
    b = run_cli("score", REQUESTS, "--records", RECORDS)
    assert a.stdout == b.stdout


def test_score_workers_do_not_change_bytes():
    one = run_cli("score", REQUESTS, "--records", RECORDS)
    four = run_cli("score", REQUESTS, "--records", RECORDS, "--workers", "4")
    assert one.stdout == four.stdout
    assert four.returncode == 2


def test_score_stdin_stdout():
    row = {"id": "s1", "record_id": "g-inf-1", "response": "<think>t</think><answer>2020-05</answer>"}
    proc = run_cli("score", "-", "--records", RECORDS, stdin=(json.dumps(row) + "\n").encode())
    assert proc.returncode == 0
    out = json.loads(proc.stdout.decode())
    assert out["score"]["total"] == pytest.approx(1.1, abs=1e-12)


def test_score_clean_input_exits_zero(tmp_path):
    rows = tmp_path / "rows.jsonl"
    rows.write_text(
        json.dumps({"id": "a", "record_id": "g-ord-1", "response": "<think>x</think><answer>Event 1: 2020-03. Event 2: 2020-01. Event 3: 2020-06. Order: 2-1-3.</answer>"})
        + "\n",
        encoding="utf-8",
    )
    proc = run_cli("score", str(rows), "--records", RECORDS)
    assert proc.returncode == 0


def test_score_flag_defaults_apply_to_rows(tmp_path):
    rows = tmp_path / "rows.jsonl"
    rows.write_text(
        json.dumps({"id": "a", "record_id": "g-inf-2", "response": "<think>x</think><answer>2021-01</answer>"}) + "\n",
        encoding="utf-8",
    )
    proc = run_cli("score", str(rows), "--records", RECORDS, "--phase", "p2")
    row = json.loads(proc.stdout.decode())
    assert row["score"]["diagnostics"]["alphas"] == [0.07]


def test_score_stage_contradiction_errors(tmp_path):
    rows = tmp_path / "rows.jsonl"
    rows.write_text(
        json.dumps({"id": "a", "record_id": "g-pred-1", "response": "<answer>2024-08</answer>", "stage": "stage1"}) + "\n",
        encoding="utf-8",
    )
    proc = run_cli("score", str(rows), "--records", RECORDS)
    assert proc.returncode == 2
    assert "stage2" in json.loads(proc.stdout.decode())["error"]


def test_score_custom_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"shaping": {"format_bonus": 0.5}}), encoding="utf-8")
    row = {"id": "s1", "record_id": "g-inf-1", "response": "<think>t</think><answer>2020-05</answer>"}
    proc = run_cli(
        "score", "-", "--records", RECORDS, "--config", str(cfg),
        stdin=(json.dumps(row) + "\n").encode(),
    )
    out = json.loads(proc.stdout.decode())
    assert out["score"]["r_ans_fmt"] == 0.5


def test_score_duplicate_record_ids_fatal(tmp_path):
    records = tmp_path / "records.jsonl"
    line = json.dumps(
        {
            "id": "dup", "task": "inference",
            "events": [{"headline": "H"}], "ground_truth": {"dates": ["2020-01"]},
            "split": "train", "period": "2020-01",
        }
    )
    records.write_text(line + "\n" + line + "\n", encoding="utf-8")
    proc = run_cli("score", "-", "--records", str(records), stdin=b"")
    assert proc.returncode == 1
    assert b"duplicate" in proc.stderr


# ------------------------------------------------------------ advantage


def test_advantage_from_scored_rows():
    scored = run_cli("score", REQUESTS, "--records", RECORDS).stdout.decode().splitlines()
    grouped = [l for l in scored if '"group_id":"grp-a"' in l]
    assert len(grouped) == 3
    proc = run_cli("advantage", "-", "--ragged", stdin="\n".join(grouped).encode())
    assert proc.returncode == 0
    rows = [json.loads(l) for l in proc.stdout.decode().splitlines()]
    assert [r["id"] for r in rows] == ["q01", "q02", "q03"]
    assert all("advantage" in r and "score" in r for r in rows)
    advantages = [r["advantage"] for r in rows]
    assert sum(advantages) == pytest.approx(0.0, abs=1e-12)
    totals = [r["score"]["total"] for r in rows]
    mean = sum(totals) / 3
    assert advantages == pytest.approx([t - mean for t in totals], abs=1e-15)


def test_advantage_direct_rewards_shape():
    stdin = json.dumps({"group_id": "g", "rewards": [1.0, 0.5, 0.0, 0.5, 1.0]}).encode()
    proc = run_cli("advantage", "-", stdin=stdin)
    assert proc.returncode == 0
    out = json.loads(proc.stdout.decode())
    assert out["advantages"] == pytest.approx([0.4, -0.1, -0.6, -0.1, 0.4], abs=1e-12)


def test_advantage_enforces_group_size():
    stdin = json.dumps({"group_id": "g", "rewards": [0.2, 0.8, 0.5, 0.5]}).encode()
    strict = run_cli("advantage", "-", stdin=stdin)
    assert strict.returncode == 2
    assert "expected 5" in json.loads(strict.stdout.decode())["error"]

    sized = run_cli("advantage", "-", "--group-size", "4", stdin=stdin)
    assert sized.returncode == 0

    rows = [
        {"group_id": "r", "id": "a", "score": {"total": 0.2}},
        {"group_id": "r", "id": "b", "score": {"total": 0.8}},
    ]
    joined = "\n".join(json.dumps(r) for r in rows).encode()
    strict = run_cli("advantage", "-", stdin=joined)
    assert strict.returncode == 2
    out = [json.loads(l) for l in strict.stdout.decode().splitlines()]
    assert all("expected 5" in r["group_error"] for r in out)
    assert b"ragged groups: r" in strict.stderr

    tolerant = run_cli("advantage", "-", "--ragged", stdin=joined)
    assert tolerant.returncode == 0
    out = [json.loads(l) for l in tolerant.stdout.decode().splitlines()]
    assert [r["advantage"] for r in out] == pytest.approx([-0.3, 0.3], abs=1e-12)


def test_advantage_rejects_small_and_broken_groups():
    stdin = json.dumps({"group_id": "g", "rewards": [1.0]}).encode()
    proc = run_cli("advantage", "-", stdin=stdin)
    assert proc.returncode == 2
    assert "error" in json.loads(proc.stdout.decode())

    rows = [
        {"group_id": "g2", "id": "a", "score": {"total": 1.0}},
        {"group_id": "g2", "id": "b", "error": "boom"},
    ]
    stdin = "\n".join(json.dumps(r) for r in rows).encode()
    proc = run_cli("advantage", "-", "--ragged", stdin=stdin)
    assert proc.returncode == 2
    out = [json.loads(l) for l in proc.stdout.decode().splitlines()]
    assert "unscored" in out[0]["group_error"]


def test_advantage_custom_reward_field():
    rows = [
        {"group_id": "g", "id": "a", "score": {"r_acc": 0.4, "total": 9.0}},
        {"group_id": "g", "id": "b", "score": {"r_acc": 0.6, "total": 9.0}},
    ]
    stdin = "\n".join(json.dumps(r) for r in rows).encode()
    proc = run_cli("advantage", "-", "--ragged", "--reward-field", "score.r_acc", stdin=stdin)
    out = [json.loads(l) for l in proc.stdout.decode().splitlines()]
    assert [r["advantage"] for r in out] == pytest.approx([-0.1, 0.1], abs=1e-12)


# ------------------------------------------------------------ objective


def test_objective_command():
    group = {
        "group_id": "g",
        "samples": [
            {"reward": 0.5, "logprob_current": -1.0, "logprob_reference": -1.2},
            {"reward": 0.5, "logprob_current": -2.0, "logprob_reference": -2.1},
        ],
    }
    proc = run_cli("objective", "-", stdin=json.dumps(group).encode())
    assert proc.returncode == 0
    out = json.loads(proc.stdout.decode())
    kl = ((-1.0 + 1.2) + (-2.0 + 2.1)) / 2
    assert out["kl"] == pytest.approx(kl, abs=1e-15)
    assert out["objective"] == pytest.approx(-0.001 * kl, abs=1e-15)
    assert out["advantages"] == pytest.approx([0.0, 0.0], abs=1e-15)


def test_objective_rejects_single_sample():
    group = {"samples": [{"reward": 1.0, "logprob_current": -1.0, "logprob_reference": -1.0}]}
    proc = run_cli("objective", "-", stdin=json.dumps(group).encode())
    assert proc.returncode == 2


# ------------------------------------------------------------ stratify


def test_stratify_rows():
    rows = [
        {"id": "a", "baseline_delta_months": 0},
        {"id": "b", "baseline_delta_months": 3},
        {"id": "c", "baseline_delta_months": 4},
    ]
    proc = run_cli("stratify", "-", stdin="\n".join(json.dumps(r) for r in rows).encode())
    assert proc.returncode == 0
    labels = [json.loads(l)["difficulty"] for l in proc.stdout.decode().splitlines()]
    assert labels == ["easy", "easy", "normal_hard"]


def test_stratify_threshold_flag_and_errors():
    rows = [{"id": "a", "baseline_delta_months": 5}, {"id": "b"}]
    proc = run_cli(
        "stratify", "-", "--easy-threshold", "5",
        stdin="\n".join(json.dumps(r) for r in rows).encode(),
    )
    assert proc.returncode == 2
    lines = [json.loads(l) for l in proc.stdout.decode().splitlines()]
    assert lines[0]["difficulty"] == "easy"
    assert "error" in lines[1]


# ------------------------------------------------------------ curriculum


def test_curriculum_eval_table():
    out = json.loads(run_cli("curriculum").stdout.decode())
    assert out["alphas"] == {"easy": 0.1, "normal_hard": 0.1}


def test_curriculum_p3_midpoint():
    out = json.loads(run_cli("curriculum", "--phase", "p3", "--step", "25").stdout.decode())
    assert out["alphas"]["normal_hard"] == pytest.approx(0.085, abs=1e-12)
    assert out["alphas"]["easy"] == 0.1


def test_curriculum_p1_notes_hard_rejection():
    out = json.loads(run_cli("curriculum", "--phase", "p1").stdout.decode())
    assert out["alphas"]["normal_hard"] is None
    assert "note" in out


def test_curriculum_plan():
    out = json.loads(run_cli("curriculum", "--plan").stdout.decode())
    assert out["total_steps"] == 1700
    assert [s["steps"] for s in out["segments"]] == [100, 500, 1000, 100]


# ------------------------------------------------------------ dataset commands


def test_validate_golden_records():
    proc = run_cli("validate", RECORDS)
    assert proc.returncode == 0
    manifest = json.loads(proc.stdout.decode())
    assert manifest["total"] == 8
    assert manifest["by_task"]["inference"] == 2
    assert manifest["error_count"] == 0


def test_validate_flags_bad_lines(tmp_path):
    path = tmp_path / "bad.jsonl"
    good = Path(RECORDS).read_text().splitlines()[0]
    path.write_text(good + "\nnot json\n", encoding="utf-8")
    proc = run_cli("validate", str(path))
    assert proc.returncode == 2
    assert json.loads(proc.stdout.decode())["error_count"] == 1
    assert b"line 2" in proc.stderr


def test_desks_json_and_csv():
    proc = run_cli("desks", RECORDS)
    rows = json.loads(proc.stdout.decode())
    by_desk = {r["desk"]: r for r in rows}
    assert by_desk["Business"]["count"] == 2
    assert by_desk["Science"]["count"] == 0  # from default targets
    assert by_desk["Foreign"]["target_pct"] == 20.8
    csv_proc = run_cli("desks", RECORDS, "--format", "csv")
    assert csv_proc.stdout.decode().splitlines()[0] == "desk,count,share_pct,target_pct,delta_pct"


def test_filter_split_and_window():
    proc = run_cli("filter", RECORDS, "--split", "test", "--from", "2024-08", "--to", "2025-02")
    assert proc.returncode == 0
    lines = proc.stdout.decode().splitlines()
    assert len(lines) == 1
    assert json.loads(lines[0])["id"] == "g-pred-1"


def test_filter_requires_both_window_edges():
    proc = run_cli("filter", RECORDS, "--from", "2024-08")
    assert proc.returncode == 1


# ------------------------------------------------------------ geneval


@pytest.fixture
def geneval_inputs(tmp_path):
    themes = ["Business", "Science"]
    generated = [
        {
            "theme": theme,
            "month": "2024-09",
            "headline": f"{theme} {i} outlook shifts",
            "abstract": f"text {theme} {i}",
        }
        for theme in themes
        for i in range(7)
    ]
    real = {"2024-09": [f"real article {i} about markets {i}" for i in range(6)]}
    gen_path = tmp_path / "generated.json"
    real_path = tmp_path / "real.json"
    gen_path.write_text(json.dumps(generated), encoding="utf-8")
    real_path.write_text(json.dumps(real), encoding="utf-8")
    return str(gen_path), str(real_path)


def test_geneval_offline_json(geneval_inputs):
    gen_path, real_path = geneval_inputs
    proc = run_cli("geneval", "--generated", gen_path, "--real", real_path)
    assert proc.returncode == 0
    report = json.loads(proc.stdout.decode())
    month = report["months"][0]
    assert month["month"] == "2024-09"
    assert month["n_selected"] == 10  # 2 themes x 5
    assert 0.0 <= month["avg_max_sim"] <= 1.0
    assert report["overall"] == pytest.approx(month["avg_max_sim"])


def test_geneval_formats(geneval_inputs):
    gen_path, real_path = geneval_inputs
    csv_out = run_cli("geneval", "--generated", gen_path, "--real", real_path, "--format", "csv")
    assert csv_out.stdout.decode().startswith("month,avg_max_sim")
    text_out = run_cli("geneval", "--generated", gen_path, "--real", real_path, "--format", "text")
    assert "overall" in text_out.stdout.decode()


def test_geneval_deterministic(geneval_inputs):
    gen_path, real_path = geneval_inputs
    a = run_cli("geneval", "--generated", gen_path, "--real", real_path)
    b = run_cli("geneval", "--generated", gen_path, "--real", real_path)
    assert a.stdout == b.stdout


# ------------------------------------------------------------ fatal paths


def test_missing_file_is_fatal():
    proc = run_cli("score", "/nonexistent/rows.jsonl")
    assert proc.returncode == 1
    assert b"error" in proc.stderr
