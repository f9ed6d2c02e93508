/**
 * plot --csv <path> --x <col> --out <path> [--y <col>] [--logx]
 *      [--scenario <1|2>] [--dump <path>]
 *
 * Renders an SVG figure from a sweep CSV and writes a companion point
 * dump (default: <out> with a .points.csv suffix) holding exactly the
 * plotted subset of the input. Exit 0 on success, 1 with a one-line
 * reason otherwise.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { render } from "./plot.js";

interface Args {
  csv?: string;
  x?: string;
  y: string;
  out?: string;
  dump?: string;
  logx: boolean;
  scenario?: string;
}

function parseArgs(argv: string[]): Args {
  const args: Args = { y: "pd_cf", logx: false };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const next = (): string => {
      i += 1;
      if (i >= argv.length) {
        throw new Error(`flag ${flag} needs a value`);
      }
      return argv[i];
    };
    switch (flag) {
      case "--csv":
        args.csv = next();
        break;
      case "--x":
        args.x = next();
        break;
      case "--y":
        args.y = next();
        break;
      case "--out":
        args.out = next();
        break;
      case "--dump":
        args.dump = next();
        break;
      case "--scenario":
        args.scenario = next();
        break;
      case "--logx":
        args.logx = true;
        break;
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  if (!args.csv || !args.x || !args.out) {
    throw new Error("required: --csv <path> --x <col> --out <path>");
  }
  return args;
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
  try {
    const csvText = readFileSync(args.csv!, "utf-8");
    const result = render({
      csvText,
      xColumn: args.x!,
      yColumn: args.y,
      logX: args.logx,
      scenario: args.scenario,
    });
    writeFileSync(args.out!, result.svg);
    const dumpPath = args.dump ?? args.out!.replace(/\.[^.]*$/, "") + ".points.csv";
    writeFileSync(dumpPath, result.dump);
    console.log(
      `wrote ${args.out} (${result.groups.length} series) and ${dumpPath}`,
    );
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
