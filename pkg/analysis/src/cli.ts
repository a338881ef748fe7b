#!/usr/bin/env node
/**
 * Render one figure from simulator output directories.
 *
 * Usage:
 *   node dist/cli.js --figure 1 --inputs out/g02,out/g04,out/g08 --out fig1.svg
 *
 * --figure   1 | 2 | 3a | 3b
 * --inputs   comma-separated run directories (figures 3a/3b take exactly one)
 * --out      output SVG path
 */

import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";

import { FIGURE_IDS, FigureId, renderFigure } from "./figures.js";

function usage(): string {
  return "usage: cli --figure {1|2|3a|3b} --inputs DIR[,DIR...] --out FILE.svg";
}

export function main(argv: string[]): number {
  let values: { figure?: string; inputs?: string; out?: string };
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        figure: { type: "string" },
        inputs: { type: "string" },
        out: { type: "string" },
      },
    }));
  } catch (err) {
    console.error(`${(err as Error).message}\n${usage()}`);
    return 1;
  }
  if (!values.figure || !values.inputs || !values.out) {
    console.error(usage());
    return 1;
  }
  if (!(FIGURE_IDS as readonly string[]).includes(values.figure)) {
    console.error(`unknown figure '${values.figure}' (use ${FIGURE_IDS.join(", ")})`);
    return 1;
  }
  const inputDirs = values.inputs.split(",").map((d) => d.trim()).filter((d) => d);
  try {
    const result = renderFigure({
      figureId: values.figure as FigureId,
      inputDirs,
      outputPath: values.out,
    });
    for (const note of result.notes) console.log(note);
    console.log(`wrote ${result.outputPath}`);
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
