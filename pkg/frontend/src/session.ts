import * as fs from "fs";
import * as path from "path";

import { writeEmbeddingsCsv, tempDir } from "./files";
import { EmcompConfigError, invoke } from "./native";

export interface SessionOptions {
  threshold?: number;
  variant?: "fss" | "ss";
  compare?: "division" | "crossmul";
  ell?: number;
  frac?: number;
  seed?: number;
  threads?: number;
  net?: string;
}

/** The CLI's JSON report for one run, verbatim. */
export interface RunReport {
  mode: string;
  session_id: number;
  rounds: number;
  wall_seconds: number;
  bytes_client: number;
  bytes_server: number;
  simulated_ms: number;
  phase_ms: Record<string, number>;
  indices?: number[];
  v?: number[];
  match?: boolean;
}

/**
 * One queryable handle over a server-side embedding database.
 *
 * Each query runs a fresh protocol session underneath (dealer material is
 * never reused); the handle only pins the database, the configuration and
 * a scratch directory. Not shareable across threads; use one per worker.
 */
export class BoundSession {
  private readonly dbPath: string;
  private readonly opts: SessionOptions;
  private readonly scratch: string;
  private closed = false;
  lastReport: RunReport | null = null;

  constructor(dbPath: string, opts: SessionOptions = {}) {
    if (!fs.existsSync(dbPath)) {
      throw new EmcompConfigError(`database file not found: ${dbPath}`);
    }
    this.dbPath = dbPath;
    this.opts = opts;
    this.scratch = tempDir();
  }

  private flags(extra: string[] = []): string[] {
    const o = this.opts;
    const out: string[] = [];
    if (o.threshold !== undefined) out.push("--threshold", String(o.threshold));
    if (o.variant) out.push("--variant", o.variant);
    if (o.compare) out.push("--compare", o.compare);
    if (o.ell !== undefined) out.push("--ell", String(o.ell));
    if (o.frac !== undefined) out.push("--frac", String(o.frac));
    if (o.seed !== undefined) out.push("--seed", String(o.seed));
    if (o.threads !== undefined) out.push("--threads", String(o.threads));
    if (o.net) out.push("--net", o.net);
    return out.concat(extra);
  }

  private guard(): void {
    if (this.closed) throw new EmcompConfigError("session is closed");
  }

  /** Secure 1:N comparison; matched indices, or a single membership bit. */
  runQuery(query: number[] | string, mode: "indices" | "bit" = "indices"):
    number[] | boolean {
    this.guard();
    let queryPath: string;
    if (typeof query === "string") {
      queryPath = query;
    } else {
      queryPath = path.join(this.scratch, "query.csv");
      writeEmbeddingsCsv(queryPath, [query], ["query"]);
    }
    const { stdout } = invoke([
      "run", "--db", this.dbPath, "--query", queryPath, "--mode", mode,
      ...this.flags(),
    ]);
    const report: RunReport = JSON.parse(stdout);
    this.lastReport = report;
    return mode === "indices" ? report.indices ?? [] : report.match ?? false;
  }

  close(): void {
    this.closed = true;
    fs.rmSync(this.scratch, { recursive: true, force: true });
  }
}
