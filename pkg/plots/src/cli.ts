/**
 * plot <kind> --in PATH [--in PATH...] --out PATH
 *
 * Renders one experiment artifact into an SVG figure.  Exit codes:
 * 0 on success, 2 on usage or schema errors (the offending column is
 * named on stderr).
 */

import { readFileSync, writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";

import { SchemaError } from "./csv.js";
import { FIGURE_KINDS, FigureKind, Input, render } from "./figures.js";

export function runCli(argv: string[]): number {
  const usage = `usage: plot <kind> --in PATH [--in PATH...] --out PATH\n` +
    `kinds: ${FIGURE_KINDS.join(", ")}`;
  if (argv.length === 0 || argv[0] === "--help" || argv[0] === "-h") {
    process.stderr.write(usage + "\n");
    return argv.length === 0 ? 2 : 0;
  }
  const kind = argv[0];
  if (!(FIGURE_KINDS as readonly string[]).includes(kind)) {
    process.stderr.write(`unknown figure kind '${kind}'\n${usage}\n`);
    return 2;
  }
  const inPaths: string[] = [];
  let outPath: string | undefined;
  for (let i = 1; i < argv.length; i++) {
    if (argv[i] === "--in" && i + 1 < argv.length) {
      inPaths.push(argv[++i]);
    } else if (argv[i] === "--out" && i + 1 < argv.length) {
      outPath = argv[++i];
    } else {
      process.stderr.write(`unrecognized argument '${argv[i]}'\n${usage}\n`);
      return 2;
    }
  }
  if (inPaths.length === 0 || !outPath) {
    process.stderr.write(`need at least one --in and exactly one --out\n${usage}\n`);
    return 2;
  }
  let inputs: Input[];
  try {
    inputs = inPaths.map((path) => ({ path, text: readFileSync(path, "utf8") }));
  } catch (err) {
    process.stderr.write(`cannot read input: ${(err as Error).message}\n`);
    return 2;
  }
  try {
    const svg = render(kind as FigureKind, inputs);
    writeFileSync(outPath, svg);
  } catch (err) {
    if (err instanceof SchemaError) {
      process.stderr.write(`schema mismatch: ${err.message}\n`);
      return 2;
    }
    throw err;
  }
  return 0;
}

if (process.argv[1] !== undefined
    && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(runCli(process.argv.slice(2)));
}
