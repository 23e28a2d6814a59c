/**
 * Process-level bridge to the emcomp CLI.
 *
 * The wrapper deliberately speaks only the tool's external surface:
 * subcommands, embedding files and JSON/CSV reports. No share or key
 * material ever crosses into this layer.
 */

import { execFileSync } from "child_process";

export class EmcompConfigError extends Error {}
export class EmcompProtocolError extends Error {}

export interface InvokeResult {
  stdout: string;
  stderr: string;
}

export function emcompBinary(): string {
  return process.env.EMCOMP_BIN || "emcomp";
}

export function invoke(args: string[], timeoutMs = 600_000): InvokeResult {
  try {
    const stdout = execFileSync(emcompBinary(), args, {
      encoding: "utf8",
      timeout: timeoutMs,
      maxBuffer: 64 * 1024 * 1024,
    });
    return { stdout, stderr: "" };
  } catch (err: any) {
    const stderr: string = err.stderr?.toString?.() ?? "";
    if (err.status === 2) throw new EmcompConfigError(stderr.trim() || "configuration error");
    if (err.status === 3) throw new EmcompProtocolError(stderr.trim() || "protocol abort");
    throw err;
  }
}
