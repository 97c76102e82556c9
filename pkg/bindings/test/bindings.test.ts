import { spawnSync } from "node:child_process";
import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import {
  EngineError,
  ScoreSuccess,
  advantages,
  alphaFor,
  isScoreFailure,
  scoreBatch,
  version,
} from "../src/index.js";

const recordsPath = fileURLToPath(
  new URL("../../tests/data/golden_records.jsonl", import.meta.url),
);
const requestsPath = fileURLToPath(
  new URL("../../tests/data/golden_requests.jsonl", import.meta.url),
);

/** Direct CLI run, independent of the bindings' own plumbing. */
function cliRun(args: string[], input = ""): { status: number; stdout: string } {
  const proc = spawnSync("python3", ["-m", "timescore", ...args], {
    input,
    encoding: "utf8",
    maxBuffer: 64 * 1024 * 1024,
  });
  if (proc.error) {
    throw proc.error;
  }
  return { status: proc.status ?? -1, stdout: proc.stdout };
}

function goldenCalls(): Record<string, unknown>[] {
  return readFileSync(requestsPath, "utf8")
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line));
}

describe("scoreBatch", () => {
  it("matches the CLI on the golden corpus", async () => {
    const direct = cliRun(["score", requestsPath, "--records", recordsPath]);
    expect(direct.status).toBe(2);
    const directRows = direct.stdout
      .split("\n")
      .filter((line) => line.trim().length > 0)
      .map((line) => JSON.parse(line));

    const rows = await scoreBatch(goldenCalls(), { records: recordsPath });
    expect(rows).toHaveLength(20);
    expect(rows).toStrictEqual(directRows);

    const first = rows[0] as ScoreSuccess;
    expect(first.score.total).toBe(1.0048374180359596);
    expect(rows.filter(isScoreFailure)).toHaveLength(2);
  });

  it("keeps output parallel to input and never aborts on bad calls", async () => {
    const circular: Record<string, unknown> = {};
    circular.self = circular;
    const rows = await scoreBatch(
      [
        { id: "bad-shape", record_id: "g-inf-1", response: 7 as unknown as string },
        circular as never,
        {
          id: "fine",
          record_id: "g-inf-1",
          response: "<think>t</think><answer>2020-05</answer>",
        },
      ],
      { records: recordsPath },
    );
    expect(rows).toHaveLength(3);
    expect(isScoreFailure(rows[0]) && rows[0].error).toMatch(/response/);
    expect(isScoreFailure(rows[1]) && rows[1].error).toMatch(/serializable/);
    const fine = rows[2] as ScoreSuccess;
    expect(fine.score.total).toBe(1.1);
  });

  it("scores an inline record identically to a record_id join", async () => {
    const record = {
      id: "inline-1",
      task: "inference",
      events: [{ headline: "spinoff announced" }],
      ground_truth: { dates: ["2020-05"] },
      split: "train",
      period: "2020-05",
    };
    const response = "<think>t</think><answer>2020-06</answer>";
    const [viaInline] = await scoreBatch([{ id: "a", record, response }]);
    const [viaJoin] = await scoreBatch([{ id: "a", record_id: "g-inf-1", response }], {
      records: recordsPath,
    });
    const inlineScore = (viaInline as ScoreSuccess).score;
    const joinScore = (viaJoin as ScoreSuccess).score;
    expect(inlineScore.total).toBe(joinScore.total);
    expect(inlineScore.r_acc).toBe(0.9048374180359595);
  });

  it("returns an empty result for an empty batch", async () => {
    expect(await scoreBatch([])).toStrictEqual([]);
  });

  it("rejects with EngineError when the engine command cannot run", async () => {
    await expect(
      scoreBatch([{ record_id: "x", response: "y" }], { cli: "no-such-engine-binary-xyz" }),
    ).rejects.toBeInstanceOf(EngineError);
  });
});

describe("advantages", () => {
  it("matches the CLI appended advantages on the golden corpus", async () => {
    const direct = cliRun(["score", requestsPath, "--records", recordsPath]);
    const groupLines = direct.stdout
      .split("\n")
      .filter((line) => line.includes('"group_id":"grp-a"'));
    expect(groupLines).toHaveLength(3);
    const directAdv = cliRun(["advantage", "-", "--ragged"], groupLines.join("\n") + "\n");
    expect(directAdv.status).toBe(0);
    const appended = directAdv.stdout
      .split("\n")
      .filter((line) => line.trim().length > 0)
      .map((line) => JSON.parse(line).advantage as number);

    const totals = groupLines.map((line) => JSON.parse(line).score.total as number);
    const result = await advantages([totals]);
    expect(result).toHaveLength(1);
    expect(result[0]).toStrictEqual(appended);
  });

  it("is zero-sum and exact on a simple pair", async () => {
    const [pair] = await advantages([[0.2, 0.8]]);
    expect(pair).toStrictEqual([0.2 - 0.5, 0.8 - 0.5]);
  });

  it("returns independent baselines per group", async () => {
    const [a, b] = (await advantages([
      [1.0, 0.0],
      [0.5, 0.5, 0.5],
    ])) as number[][];
    expect(a).toStrictEqual([0.5, -0.5]);
    expect(b).toStrictEqual([0.0, 0.0, 0.0]);
  });

  it("turns a short group into a per-group error, not a rejection", async () => {
    const result = await advantages([[1.0], [0.2, 0.8]]);
    expect(result[0]).toHaveProperty("error");
    expect(result[1]).toStrictEqual([0.2 - 0.5, 0.8 - 0.5]);
  });

  it("returns an empty result for an empty list", async () => {
    expect(await advantages([])).toStrictEqual([]);
  });
});

describe("alphaFor", () => {
  it("reads the curriculum schedule", async () => {
    expect(await alphaFor("p3", 25)).toBe(0.085);
    expect(await alphaFor("p3", 0)).toBe(0.07);
    expect(await alphaFor("p3", 500)).toBe(0.1);
    expect(await alphaFor("p2", 100)).toBe(0.07);
    expect(await alphaFor("eval", 0, "easy")).toBe(0.1);
  });

  it("rejects a difficulty the phase does not admit", async () => {
    await expect(alphaFor("p1", 0, "normal_hard")).rejects.toThrow(/easy/);
  });
});

describe("version", () => {
  it("reports the engine version", async () => {
    expect(await version()).toMatch(/^\d+\.\d+\.\d+$/);
  });
});

describe("concurrency", () => {
  it("serves parallel callers independently", async () => {
    const calls = goldenCalls().slice(0, 3);
    const [batchA, batchB, alpha] = await Promise.all([
      scoreBatch(calls, { records: recordsPath }),
      scoreBatch(calls, { records: recordsPath }),
      alphaFor("p3", 25),
    ]);
    expect(batchA).toStrictEqual(batchB);
    expect(alpha).toBe(0.085);
  });
});
