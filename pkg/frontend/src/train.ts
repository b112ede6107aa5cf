/**
 * Training loop: stochastic gradient descent with momentum on the mean
 * absolute error, shuffling the training set before each epoch.
 */

import * as tf from "@tensorflow/tfjs";

import { Predictor } from "./model";

export interface TrainSpec {
  epochs: number;
  batchSize: number;
  learningRate: number;
  momentum: number;
  seed: number;
  shuffle: boolean;
}

export const DEFAULT_TRAIN: TrainSpec = {
  epochs: 200,
  batchSize: 64,
  learningRate: 0.001,
  momentum: 0.9,
  seed: 0,
  shuffle: true,
};

/** Small deterministic PRNG for epoch shuffles. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function shuffled(count: number, rand: () => number): number[] {
  const idx = Array.from({ length: count }, (_, i) => i);
  for (let i = count - 1; i > 0; i--) {
    const j = Math.floor(rand() * (i + 1));
    [idx[i], idx[j]] = [idx[j], idx[i]];
  }
  return idx;
}

export function maeLoss(pred: tf.Tensor, truth: tf.Tensor): tf.Scalar {
  return tf.mean(tf.abs(tf.sub(pred, truth)));
}

/**
 * Returns the per-epoch mean training MAE curve.
 */
export function train(
  model: Predictor,
  xs: tf.Tensor4D,
  ys: tf.Tensor4D,
  spec: Partial<TrainSpec> = {},
): number[] {
  const cfg = { ...DEFAULT_TRAIN, ...spec };
  const optimizer = tf.train.momentum(cfg.learningRate, cfg.momentum);
  const rand = mulberry32(cfg.seed + 1);
  const count = xs.shape[0];
  const curve: number[] = [];
  const vars = model.trainables();
  for (let epoch = 0; epoch < cfg.epochs; epoch++) {
    const order = cfg.shuffle ? shuffled(count, rand) : Array.from({ length: count }, (_, i) => i);
    let epochLoss = 0;
    let batches = 0;
    for (let at = 0; at < count; at += cfg.batchSize) {
      const take = order.slice(at, at + cfg.batchSize);
      const loss = tf.tidy(() => {
        const bx = tf.gather(xs, take) as tf.Tensor4D;
        const by = tf.gather(ys, take) as tf.Tensor4D;
        const value = optimizer.minimize(
          () => maeLoss(model.forward(bx), by),
          true,
          vars,
        ) as tf.Scalar;
        return value.dataSync()[0];
      });
      epochLoss += loss;
      batches += 1;
    }
    curve.push(epochLoss / batches);
  }
  optimizer.dispose();
  return curve;
}
