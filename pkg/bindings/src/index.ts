import { EngineError, parseLines, runEngine } from "./engine.js";

export { EngineError } from "./engine.js";

/** Options shared by every binding call. */
export interface EngineOptions {
  /** Engine command override; defaults to $TIMESCORE_CLI, then "python3 -m timescore". */
  cli?: string;
}

/** One scoring call. Field names match the CLI's JSONL input rows. */
export interface ScoreCall {
  id?: string;
  group_id?: string;
  record?: Record<string, unknown>;
  record_id?: string;
  response?: string;
  stage?: string;
  phase?: string;
  step?: number;
  [extra: string]: unknown;
}

export interface ScoreBatchOptions extends EngineOptions {
  /** Records JSONL path for record_id joins. */
  records?: string;
  /** Engine config JSON path. */
  config?: string;
  /** Default curriculum phase for rows that do not set one. */
  phase?: string;
  /** Default curriculum step for rows that do not set one. */
  step?: number;
}

export interface ScoreValues {
  r_acc: number;
  r_ans_fmt: number;
  r_tags: number;
  p_no_event: number;
  p_len_rep: number;
  total: number;
  diagnostics: Record<string, unknown>;
}

export interface ScoreSuccess {
  id: string | null;
  group_id: string | null;
  task: string;
  stage: string;
  score: ScoreValues;
}

export interface ScoreFailure {
  id?: string | null;
  group_id?: string | null;
  line?: number;
  error: string;
}

export type ScoreRow = ScoreSuccess | ScoreFailure;

export function isScoreFailure(row: ScoreRow): row is ScoreFailure {
  return typeof (row as ScoreFailure).error === "string";
}

/**
 * Score a batch of calls through the engine CLI.
 *
 * The result is parallel to the input: result[i] belongs to calls[i] and is
 * either a scored row or an error entry, with field names exactly as the CLI
 * emits them. A malformed call becomes a per-item error entry; the promise
 * rejects only when the engine itself cannot run.
 */
export async function scoreBatch(
  calls: ScoreCall[],
  options: ScoreBatchOptions = {},
): Promise<ScoreRow[]> {
  const out: (ScoreRow | null)[] = new Array(calls.length).fill(null);
  const lines: string[] = [];
  const sent: number[] = [];
  calls.forEach((call, index) => {
    let line: string | undefined;
    if (call !== null && typeof call === "object" && !Array.isArray(call)) {
      try {
        line = JSON.stringify(call);
      } catch {
        line = undefined;
      }
    }
    if (line === undefined) {
      out[index] = { id: null, group_id: null, error: "call is not a JSON-serializable object" };
      return;
    }
    lines.push(line);
    sent.push(index);
  });

  if (lines.length > 0) {
    const args = ["score", "-"];
    if (options.records !== undefined) args.push("--records", options.records);
    if (options.config !== undefined) args.push("--config", options.config);
    if (options.phase !== undefined) args.push("--phase", options.phase);
    if (options.step !== undefined) args.push("--step", String(options.step));
    const run = await runEngine(args, lines.join("\n") + "\n", options.cli, [0, 2]);
    const rows = parseLines(run.stdout) as ScoreRow[];
    if (rows.length !== sent.length) {
      throw new EngineError(
        `engine returned ${rows.length} rows for ${sent.length} calls`,
        run.code,
        run.stderr,
      );
    }
    rows.forEach((row, k) => {
      out[sent[k]] = row;
    });
  }
  return out as ScoreRow[];
}

export type AdvantageResult = number[] | { error: string };

/**
 * Group-relative advantages, one result per reward group. Groups may be any
 * size of at least 2; a bad group yields a per-group error entry in place.
 */
export async function advantages(
  rewardGroups: number[][],
  options: EngineOptions = {},
): Promise<AdvantageResult[]> {
  if (rewardGroups.length === 0) {
    return [];
  }
  const lines = rewardGroups.map((rewards, index) =>
    JSON.stringify({ group_id: String(index), rewards }),
  );
  const run = await runEngine(
    ["advantage", "-", "--ragged"],
    lines.join("\n") + "\n",
    options.cli,
    [0, 2],
  );
  const rows = parseLines(run.stdout) as Array<{
    advantages?: number[];
    error?: string;
  }>;
  if (rows.length !== rewardGroups.length) {
    throw new EngineError(
      `engine returned ${rows.length} groups for ${rewardGroups.length}`,
      run.code,
      run.stderr,
    );
  }
  return rows.map((row) =>
    row.advantages !== undefined ? row.advantages : { error: row.error ?? "unknown failure" },
  );
}

export type Difficulty = "easy" | "normal_hard";

/**
 * Curriculum decay rate for a difficulty at a schedule point. Rejects when
 * the phase does not admit the difficulty (phase one takes easy rows only).
 */
export async function alphaFor(
  phase: string,
  step: number,
  difficulty: Difficulty = "normal_hard",
  options: EngineOptions = {},
): Promise<number> {
  const run = await runEngine(
    ["curriculum", "--phase", phase, "--step", String(step)],
    "",
    options.cli,
  );
  const row = parseLines(run.stdout)[0] as {
    alphas: Record<string, number | null>;
    note?: string;
  };
  const alpha = row.alphas[difficulty];
  if (alpha === null || alpha === undefined) {
    throw new EngineError(
      row.note ?? `no alpha for ${difficulty} in phase ${phase}`,
      run.code,
      run.stderr,
    );
  }
  return alpha;
}

/** Engine version string, e.g. "0.1.0". */
export async function version(options: EngineOptions = {}): Promise<string> {
  const run = await runEngine(["--version"], "", options.cli);
  const text = run.stdout.trim();
  const parts = text.split(/\s+/);
  return parts[parts.length - 1] ?? text;
}
