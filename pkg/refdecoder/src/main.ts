#!/usr/bin/env node
import { DictionaryModel } from "./dictionary.js";
import { serve } from "./server.js";

function parseArgs(argv: string[]): { dict?: string } {
  const args: { dict?: string } = {};
  for (let i = 0; i < argv.length; i += 1) {
    if (argv[i] === "--dict") {
      args.dict = argv[i + 1];
      i += 1;
    } else {
      process.stderr.write(`unknown argument ${argv[i]}\n`);
      process.exit(2);
    }
  }
  return args;
}

const args = parseArgs(process.argv.slice(2));
const dictionary = args.dict ? DictionaryModel.fromTsv(args.dict) : new DictionaryModel();

serve(dictionary).then(
  () => process.exit(0),
  (err) => {
    process.stderr.write(`fatal: ${err}\n`);
    process.exit(1);
  },
);
