import { spawn } from "node:child_process";

export interface EngineRun {
  code: number;
  stdout: string;
  stderr: string;
}

/** Engine invocation failed outright, as opposed to per-item errors. */
export class EngineError extends Error {
  readonly code: number | null;
  readonly stderr: string;

  constructor(message: string, code: number | null, stderr: string) {
    const tail = stderr.trim().split("\n").slice(-3).join("\n");
    super(tail ? `${message}\n${tail}` : message);
    this.name = "EngineError";
    this.code = code;
    this.stderr = stderr;
  }
}

const DEFAULT_COMMAND = "python3 -m timescore";

/** Resolve the engine command: explicit option, then $TIMESCORE_CLI, then default. */
export function engineCommand(cli?: string): string[] {
  const raw = cli ?? process.env.TIMESCORE_CLI ?? DEFAULT_COMMAND;
  const parts = raw.split(/\s+/).filter((p) => p.length > 0);
  if (parts.length === 0) {
    throw new EngineError("engine command is empty", null, "");
  }
  return parts;
}

/**
 * Run one engine subcommand with the given stdin, collecting both streams.
 * Rejects only on spawn failure or an exit code outside okCodes; callers
 * decide whether a partial-failure exit (2) is tolerable.
 */
export function runEngine(
  args: string[],
  stdin: string,
  cli?: string,
  okCodes: number[] = [0],
): Promise<EngineRun> {
  const [command, ...prefix] = engineCommand(cli);
  return new Promise((resolve, reject) => {
    const child = spawn(command, [...prefix, ...args], {
      stdio: ["pipe", "pipe", "pipe"],
    });
    let stdout = "";
    let stderr = "";
    child.stdout.setEncoding("utf8");
    child.stderr.setEncoding("utf8");
    child.stdout.on("data", (chunk: string) => {
      stdout += chunk;
    });
    child.stderr.on("data", (chunk: string) => {
      stderr += chunk;
    });
    child.on("error", (err) => {
      reject(new EngineError(`failed to spawn engine: ${err.message}`, null, stderr));
    });
    child.on("close", (code) => {
      if (code === null || !okCodes.includes(code)) {
        reject(new EngineError(`engine exited with code ${code}`, code, stderr));
        return;
      }
      resolve({ code, stdout, stderr });
    });
    child.stdin.on("error", () => {
      // Swallow EPIPE from a fast-failing child; close handles the outcome.
    });
    child.stdin.write(stdin);
    child.stdin.end();
  });
}

/** Parse one JSON value per non-empty output line. */
export function parseLines(stdout: string): unknown[] {
  return stdout
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line));
}
