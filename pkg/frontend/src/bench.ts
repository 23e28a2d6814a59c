import { EmcompConfigError, invoke } from "./native";

export interface BenchOptions {
  m?: number;
  n?: number;
  repeats?: number;
  seed?: number;
  threads?: number;
}

export type BenchGrid = Record<string, Record<string, number>>;

const PROFILES = new Set(["lan", "wan"]);

/**
 * The {lan,wan} x {SS,FSS} x {basic,indices,bit} grid, keyed
 * "network/protocol" -> column -> milliseconds (parsed from the CLI CSV).
 */
export function bench(profile: string | null = null, opts: BenchOptions = {}): BenchGrid {
  if (profile !== null && !PROFILES.has(profile)) {
    throw new EmcompConfigError(`unknown network profile: ${profile}`);
  }
  const args = ["bench"];
  if (opts.m !== undefined) args.push("--m", String(opts.m));
  if (opts.n !== undefined) args.push("--n", String(opts.n));
  if (opts.repeats !== undefined) args.push("--repeats", String(opts.repeats));
  if (opts.seed !== undefined) args.push("--seed", String(opts.seed));
  if (opts.threads !== undefined) args.push("--threads", String(opts.threads));
  const { stdout } = invoke(args);
  const lines = stdout.trim().split("\n");
  const header = lines[0].split(",");
  const grid: BenchGrid = {};
  for (const line of lines.slice(1)) {
    const cells = line.split(",");
    if (profile !== null && cells[0] !== profile) continue;
    const row: Record<string, number> = {};
    for (let c = 2; c < header.length; c++) row[header[c]] = Number(cells[c]);
    grid[`${cells[0]}/${cells[1]}`] = row;
  }
  return grid;
}

export function benchColumns(): string[] {
  return ["basic_ms", "indices_ms", "bit_ms"];
}
