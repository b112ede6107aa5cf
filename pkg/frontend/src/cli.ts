/**
 * Command line: train a variant on an emitted dataset, predict a single
 * tensor, or evaluate the mono/dual pair.
 *
 *   node dist/cli.js train    --data DIR --out model.json --variant mono|sparse
 *                             [--epochs 200] [--batch 64] [--lr 0.001] [--seed 0]
 *   node dist/cli.js predict  --model model.json --x x.tensor --out pred.tensor
 *   node dist/cli.js evaluate --data DIR --mono mono.json --sparse sparse.json
 *                             [--csv report.csv] [--val-fraction 0.1]
 */

import * as fs from "fs";
import * as tf from "@tensorflow/tfjs";

import { loadDataset, readManifest, stack, trainValSplit } from "./dataset";
import { DualEnsemble } from "./ensemble";
import { evaluateEnsemble } from "./evaluate";
import { rowsToCsv } from "./metrics";
import { defaultConfig, Predictor } from "./model";
import { train } from "./train";
import { channel, readTensor, writeTensor } from "./tensorio";

function parseArgs(argv: string[]): Record<string, string> {
  const out: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 1) {
    if (argv[i].startsWith("--")) {
      out[argv[i].slice(2)] = argv[i + 1] ?? "";
      i += 1;
    }
  }
  return out;
}

async function cmdTrain(args: Record<string, string>): Promise<number> {
  const dir = args.data;
  const variant = args.variant ?? "mono";
  const manifest = readManifest(dir);
  const samples = loadDataset(dir, (r) => (variant === "sparse" ? r.regime === "sparse" : true));
  const { train: trainSamples } = trainValSplit(samples, Number(args["val-fraction"] ?? 0.1));
  const { xs, ys } = stack(trainSamples);
  const model = new Predictor(defaultConfig(manifest.n, Number(args.seed ?? 0)));
  const curve = train(model, xs, ys, {
    epochs: Number(args.epochs ?? 200),
    batchSize: Number(args.batch ?? 64),
    learningRate: Number(args.lr ?? 0.001),
    seed: Number(args.seed ?? 0),
  });
  model.save(args.out);
  fs.writeFileSync(args.out.replace(/\.json$/, "") + ".curve.json", JSON.stringify(curve));
  console.log(
    `trained ${variant} on ${trainSamples.length} samples; ` +
      `mae ${curve[0].toFixed(5)} -> ${curve[curve.length - 1].toFixed(5)} over ${curve.length} epochs`,
  );
  return 0;
}

async function cmdPredict(args: Record<string, string>): Promise<number> {
  const model = Predictor.load(args.model);
  const xt = readTensor(args.x);
  const n = xt.header.rows;
  const x = new Float32Array(n * n * 5);
  for (let c = 0; c < 5; c++) {
    const src = channel(xt, c);
    for (let i = 0; i < n * n; i++) x[i * 5 + c] = src[i];
  }
  const pred = model.predict(tf.tensor4d(x, [1, n, n, 5]));
  writeTensor(
    args.out,
    { ...xt.header, kind: "flow", channels: 1, rows: n, cols: n },
    pred.dataSync() as Float32Array,
  );
  console.log(`predicted ${args.x} -> ${args.out}`);
  return 0;
}

async function cmdEvaluate(args: Record<string, string>): Promise<number> {
  const samples = loadDataset(args.data);
  const { val } = trainValSplit(samples, Number(args["val-fraction"] ?? 0.1));
  const mono = Predictor.load(args.mono);
  const sparse = args.sparse ? Predictor.load(args.sparse) : mono;
  const evaluation = evaluateEnsemble(val, new DualEnsemble(mono, sparse));
  if (args.csv) fs.writeFileSync(args.csv, rowsToCsv(evaluation.rows));
  for (const agg of evaluation.aggregates) {
    console.log(
      `${agg.model}\t${agg.goal}-centric\tmae=${agg.mae.toFixed(4)}\tkl=${agg.kl.toFixed(4)}\t(${agg.cases} cases)`,
    );
  }
  return 0;
}

async function main(): Promise<number> {
  await tf.setBackend("cpu");
  const [command, ...rest] = process.argv.slice(2);
  const args = parseArgs(rest);
  try {
    if (command === "train") return await cmdTrain(args);
    if (command === "predict") return await cmdPredict(args);
    if (command === "evaluate") return await cmdEvaluate(args);
    console.error("usage: cli.js train|predict|evaluate [--flags]");
    return 1;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
}

main().then((code) => {
  process.exitCode = code;
});
