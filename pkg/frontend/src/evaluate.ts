/**
 * Per-case and aggregate evaluation of mono and dual predictors, reported
 * in the shared CSV schema (case_id, regime, goal, mae, kl).
 */

import * as tf from "@tensorflow/tfjs";

import { Sample } from "./dataset";
import { DualEnsemble } from "./ensemble";
import { EvalRow, goalTag, klDivergence, mae } from "./metrics";
import { Predictor } from "./model";

export interface Aggregate {
  model: string;
  goal: "E" | "G";
  mae: number;
  kl: number;
  cases: number;
}

export interface Evaluation {
  rows: EvalRow[];
  aggregates: Aggregate[];
}

function predictFlat(model: Predictor, sample: Sample): Float32Array {
  return tf.tidy(() => {
    const pred = model.predict(sample.x.expandDims(0) as tf.Tensor4D);
    return pred.dataSync() as Float32Array;
  });
}

function score(pred: Float32Array, sample: Sample): { mae: number; kl: number } {
  const truth = sample.y.dataSync() as Float32Array;
  return {
    mae: mae(pred, truth, sample.nav),
    kl: klDivergence(pred, truth, sample.nav),
  };
}

export function evaluateEnsemble(samples: Sample[], ensemble: DualEnsemble): Evaluation {
  if (!samples.length) throw new Error("empty test set");
  const rows: EvalRow[] = [];
  for (const sample of samples) {
    const goal = goalTag(sample.record.regime);
    const monoScore = score(predictFlat(ensemble.mono, sample), sample);
    rows.push({ case_id: `mono:${sample.record.id}`, regime: sample.record.regime, goal, ...monoScore });
    const dualModel = ensemble.modelFor(sample.record.regime);
    const dualScore =
      dualModel === ensemble.mono ? monoScore : score(predictFlat(dualModel, sample), sample);
    rows.push({ case_id: `dual:${sample.record.id}`, regime: sample.record.regime, goal, ...dualScore });
  }
  const aggregates: Aggregate[] = [];
  for (const model of ["mono", "dual"]) {
    for (const goal of ["E", "G"] as const) {
      const bucket = rows.filter((r) => r.case_id.startsWith(`${model}:`) && r.goal === goal);
      if (!bucket.length) continue;
      aggregates.push({
        model,
        goal,
        mae: bucket.reduce((a, r) => a + r.mae, 0) / bucket.length,
        kl: bucket.reduce((a, r) => a + r.kl, 0) / bucket.length,
        cases: bucket.length,
      });
    }
  }
  return { rows, aggregates };
}
