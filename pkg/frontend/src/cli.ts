#!/usr/bin/env node
/**
 * render_figures <out-dir> [--only a,b,...] [--fig-dir DIR]
 *
 * Reads the replication-harness CSVs from <out-dir> and writes one SVG per
 * figure panel (a-f, gap-histogram, eta-trace).  Inputs are never
 * modified; output is deterministic for identical inputs.  Exits 1 with a
 * column diagnostic when a CSV does not match its documented schema.
 */

import { renderAll, FIGURES } from "./figures.js";

function main(argv: string[]): number {
  const args = [...argv];
  let only: string[] | undefined;
  let figDir: string | undefined;
  const positional: string[] = [];
  while (args.length > 0) {
    const arg = args.shift()!;
    if (arg === "--only") {
      const value = args.shift();
      if (!value) {
        console.error("--only needs a comma-separated list of figure ids");
        return 1;
      }
      only = value.split(",").map((s) => s.trim()).filter((s) => s.length > 0);
    } else if (arg === "--fig-dir") {
      figDir = args.shift();
      if (!figDir) {
        console.error("--fig-dir needs a directory");
        return 1;
      }
    } else if (arg === "--help" || arg === "-h") {
      console.log(`usage: render_figures <out-dir> [--only ${Object.keys(FIGURES).join(",")}] [--fig-dir DIR]`);
      return 0;
    } else {
      positional.push(arg);
    }
  }
  if (positional.length !== 1) {
    console.error("usage: render_figures <out-dir> [--only a,b,...] [--fig-dir DIR]");
    return 1;
  }
  try {
    const written = renderAll(positional[0], only, figDir);
    for (const path of written) console.log(path);
    return 0;
  } catch (error) {
    console.error(String(error instanceof Error ? error.message : error));
    return 1;
  }
}

process.exit(main(process.argv.slice(2)));
