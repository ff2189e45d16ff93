#!/usr/bin/env node
import { writeFileSync } from "node:fs";
import { CsvError, readCsv } from "./csv.js";
import { DEFAULT_SPEC, FigureSpec, mseKOption, rocOption } from "./figures.js";
import { renderSvg } from "./render.js";

const USAGE = `usage: plots <roc|msek> <csv> -o <output.svg> [options]

commands:
  roc    ROC curves per K (columns: K,fpr,tpr[,tpr_lo,tpr_hi])
  msek   MSE versus K     (columns: K,mse[,mse_lo,mse_hi])

options:
  -o, --output <path>   output SVG path (required)
  --title <text>        figure title
  --log-x               logarithmic x axis (msek)
  --width <px>          image width (default ${DEFAULT_SPEC.width})
  --height <px>         image height (default ${DEFAULT_SPEC.height})
`;

interface Args {
  command: string;
  csv: string;
  output: string;
  spec: FigureSpec;
}

export const parseArgs = (argv: string[]): Args => {
  const positional: string[] = [];
  const spec: FigureSpec = { ...DEFAULT_SPEC };
  let output = "";
  for (let i = 0; i < argv.length; i += 1) {
    const arg = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) throw new Error(`${arg} requires a value`);
      return argv[i];
    };
    if (arg === "-o" || arg === "--output") output = next();
    else if (arg === "--title") spec.title = next();
    else if (arg === "--log-x") spec.logX = true;
    else if (arg === "--width") spec.width = Number(next());
    else if (arg === "--height") spec.height = Number(next());
    else if (arg.startsWith("-")) throw new Error(`unknown option ${arg}`);
    else positional.push(arg);
  }
  if (positional.length !== 2) throw new Error("expected <command> <csv>");
  const [command, csv] = positional;
  if (command !== "roc" && command !== "msek") {
    throw new Error(`unknown command ${command}`);
  }
  if (!output) throw new Error("-o/--output is required");
  if (!Number.isFinite(spec.width) || !Number.isFinite(spec.height)) {
    throw new Error("--width/--height must be numbers");
  }
  return { command, csv, output, spec };
};

export const run = (argv: string[]): number => {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n${USAGE}`);
    return 2;
  }
  try {
    const table = readCsv(args.csv);
    const option =
      args.command === "roc"
        ? rocOption(table, args.spec)
        : mseKOption(table, args.spec);
    const svg = renderSvg(option, args.spec.width, args.spec.height);
    writeFileSync(args.output, svg);
    process.stdout.write(`${args.output}\n`);
    return 0;
  } catch (err) {
    if (err instanceof CsvError) {
      process.stderr.write(`error: ${args.csv}: ${err.message}\n`);
      return 2;
    }
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
};

if (require.main === module) process.exit(run(process.argv.slice(2)));
