#!/usr/bin/env node
/**
 * CLI: conformance --tools <dir> --mock <addr> --out report.json
 *
 * Exit codes: 0 all tools match, 1 any mismatch or crash, 2 usage error.
 */

import { writeFile } from "node:fs/promises";
import { parseArgs } from "node:util";

import { runConformance } from "./runner.js";

export async function main(argv: string[]): Promise<number> {
  let values: { tools?: string; mock?: string; out?: string };
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        tools: { type: "string" },
        mock: { type: "string" },
        out: { type: "string" },
      },
    }));
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    return 2;
  }
  if (!values.tools) {
    console.error("usage: conformance --tools <dir> --mock <addr> [--out report.json]");
    return 2;
  }

  const run = await runConformance(values.tools, values.mock ?? null);
  const report = JSON.stringify(run, null, 2);
  if (values.out) {
    await writeFile(values.out, report, "utf-8");
  } else {
    console.log(report);
  }
  const { summary } = run;
  console.error(
    `${summary.match}/${summary.total} match, ` +
      `${summary.mismatch} mismatch, ${summary.crash} crash`,
  );
  return summary.total === summary.match ? 0 : 1;
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  main(process.argv.slice(2)).then(
    (code) => process.exit(code),
    (err) => {
      console.error(err);
      process.exit(1);
    },
  );
}
