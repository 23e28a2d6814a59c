import { execFileSync } from "child_process";

import { emcompBinary } from "./native";

export interface AttackSummary {
  max_abs_error: { real: number; ring: number };
  quantization_bound: number;
}

/** Broken-scheme recovery demo; the summary JSON arrives on stderr. */
export function attackDemo(n = 16, m = 8, seed = 0): AttackSummary {
  const proc = execFileSync(emcompBinary(), [
    "attack", "--n", String(n), "--m", String(m), "--seed", String(seed),
    "--out", "/dev/null",
  ], { encoding: "utf8", stdio: ["ignore", "pipe", "pipe"] });
  void proc;
  // execFileSync only returns stdout; rerun capturing stderr via spawnSync
  const { spawnSync } = require("child_process");
  const res = spawnSync(emcompBinary(), [
    "attack", "--n", String(n), "--m", String(m), "--seed", String(seed),
    "--out", "/dev/null",
  ], { encoding: "utf8" });
  const lines = res.stderr.trim().split("\n");
  return JSON.parse(lines[lines.length - 1]);
}
