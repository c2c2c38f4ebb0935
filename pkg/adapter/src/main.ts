/**
 * CLI entry: serve a model over stdin/stdout.
 *
 *   node dist/main.js --model table.json
 *   node dist/main.js --builtin modsum --labels 3
 *
 * Exit codes: 0 on clean stdin close, 1 on refused handshake or model
 * failure, 2 on usage errors.
 */

import * as readline from 'readline';

import { buildModel, loadModel, Model } from './model';
import { FatalSessionError, Session, refusalLine } from './server';

function usage(message: string): never {
  process.stderr.write(`patchcert-adapter: ${message}\n`);
  process.stderr.write('usage: main.js --model FILE | --builtin modsum --labels N\n');
  process.exit(2);
}

function parseArgs(argv: string[]): Model {
  let modelPath: string | undefined;
  let builtin: string | undefined;
  let labels: number | undefined;
  for (let i = 0; i < argv.length; i++) {
    switch (argv[i]) {
      case '--model':
        modelPath = argv[++i];
        break;
      case '--builtin':
        builtin = argv[++i];
        break;
      case '--labels':
        labels = Number(argv[++i]);
        break;
      default:
        usage(`unknown argument ${argv[i]}`);
    }
  }
  if (modelPath !== undefined) {
    return loadModel(modelPath);
  }
  if (builtin === 'modsum') {
    if (labels === undefined || !Number.isInteger(labels) || labels < 1) {
      usage('--builtin modsum needs --labels N');
    }
    return buildModel({ kind: 'modsum', labels });
  }
  usage('need --model FILE or --builtin modsum');
}

export function main(): void {
  const model = parseArgs(process.argv.slice(2));
  const session = new Session(model);
  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  rl.on('line', (line) => {
    try {
      process.stdout.write(session.handleLine(line));
    } catch (err) {
      if (err instanceof FatalSessionError) {
        process.stdout.write(refusalLine(err));
        process.exit(1);
      }
      process.stderr.write(`patchcert-adapter: model failure: ${String(err)}\n`);
      process.exit(1);
    }
  });
  rl.on('close', () => process.exit(0));
}

main();
