import * as fs from "fs";
import * as os from "os";
import * as path from "path";

/** One row per embedding: id, v_1, ..., v_n (the CLI's CSV format). */
export function writeEmbeddingsCsv(
  filePath: string,
  rows: number[][],
  ids?: string[]
): void {
  const lines = rows.map((row, i) => {
    const id = ids?.[i] ?? String(i);
    return [id, ...row.map((v) => v.toString())].join(",");
  });
  fs.writeFileSync(filePath, lines.join("\n") + "\n");
}

export function tempDir(prefix = "emcomp-client-"): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), prefix));
}
