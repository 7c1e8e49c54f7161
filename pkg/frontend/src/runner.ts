/**
 * Subprocess plumbing: locating and invoking the pcdist CLI.
 *
 * The binding layer talks to the core exclusively through its command-line
 * interface and file formats. The interpreter and package location are
 * overridable through PCDIST_PY and PCDIST_ROOT (the repository root whose
 * src/ holds the package).
 */

import { execFile } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { delimiter, join, resolve } from "node:path";

/** A CLI invocation failure; exit code 2 = parse error, 3 = precondition. */
export class CliError extends Error {
  readonly exitCode: number;
  readonly stderr: string;

  constructor(exitCode: number, stderr: string, args: string[]) {
    super(
      `pcdist ${args[0] ?? ""} exited with code ${exitCode}: ${stderr.trim()}`
    );
    this.name = exitCode === 3 ? "PreconditionError" : "CliParseError";
    this.exitCode = exitCode;
    this.stderr = stderr;
  }
}

export interface CliCommand {
  program: string;
  prefix: string[];
  env: NodeJS.ProcessEnv;
}

export function resolveCommand(): CliCommand {
  const python = process.env.PCDIST_PY ?? "python3";
  const root = resolve(process.env.PCDIST_ROOT ?? resolve(process.cwd(), ".."));
  const src = join(root, "src");
  const env = { ...process.env };
  env.PYTHONPATH = env.PYTHONPATH
    ? `${src}${delimiter}${env.PYTHONPATH}`
    : src;
  return { program: python, prefix: ["-m", "pcdist.cli"], env };
}

/** Run one CLI subcommand and return its stdout; rejects with CliError. */
export function runCli(args: string[]): Promise<string> {
  const { program, prefix, env } = resolveCommand();
  return new Promise((resolvePromise, reject) => {
    execFile(
      program,
      [...prefix, ...args],
      { env, maxBuffer: 256 * 1024 * 1024 },
      (error, stdout, stderr) => {
        if (error) {
          const code =
            typeof (error as NodeJS.ErrnoException & { code?: unknown })
              .code === "number"
              ? ((error as unknown as { code: number }).code as number)
              : 1;
          reject(new CliError(code, String(stderr), args));
          return;
        }
        resolvePromise(String(stdout));
      }
    );
  });
}

/** Scratch directory helper for the per-call cloud files. */
export function withScratchDir<T>(fn: (dir: string) => Promise<T>): Promise<T> {
  const dir = mkdtempSync(join(tmpdir(), "pcdist-"));
  return fn(dir).finally(() => {
    rmSync(dir, { recursive: true, force: true });
  });
}
