import * as tf from "@tensorflow/tfjs";
import { beforeAll, describe, expect, it } from "vitest";

import { defaultConfig, Predictor, unpool } from "../src/model";
import { klDivergence, mae, rowsToCsv } from "../src/metrics";
import { maeLoss, mulberry32, train } from "../src/train";

beforeAll(async () => {
  await tf.setBackend("cpu");
});

describe("unpool", () => {
  it("scatters pooled maxima back to their argmax positions", () => {
    const x = tf.tensor4d([1, 5, 3, 2], [1, 2, 2, 1]);
    const { indexes } = tf.maxPoolWithArgmax(x, 2, 2, "same", true);
    const pooled = tf.maxPool(x as tf.Tensor4D, 2, 2, "same");
    const up = unpool(pooled, indexes, [1, 2, 2, 1]);
    expect(Array.from(up.dataSync())).toEqual([0, 5, 0, 0]);
  });

  it("is differentiable through the scatter", () => {
    const x = tf.variable(tf.tensor4d([1, 5, 3, 2], [1, 2, 2, 1]));
    const idx = tf.tensor([1], [1, 1, 1, 1], "int32");  // argmax of the 2x2 block
    const grads = tf.grads((xx: tf.Tensor) => {
      const pooled = tf.maxPool(xx as tf.Tensor4D, 2, 2, "same");
      return tf.sum(unpool(pooled, idx, [1, 2, 2, 1]));
    })([x]);
    // gradient flows to the max cell only
    expect(Array.from(grads[0].dataSync())).toEqual([0, 1, 0, 0]);
  });
});

describe("predictor", () => {
  it("keeps outputs in (0, 1) with matching spatial shape", () => {
    const model = new Predictor(defaultConfig(16, 7));
    const x = tf.randomUniform([2, 16, 16, 5], 0, 1, "float32", 3) as tf.Tensor4D;
    const y = model.predict(x);
    expect(y.shape).toEqual([2, 16, 16, 1]);
    const vals = y.dataSync();
    for (const v of vals) {
      expect(v).toBeGreaterThan(0);
      expect(v).toBeLessThan(1);
    }
  });

  it("is deterministic for a fixed seed", () => {
    const x = tf.randomUniform([1, 16, 16, 5], 0, 1, "float32", 11) as tf.Tensor4D;
    const a = new Predictor(defaultConfig(16, 42)).predict(x).dataSync();
    const b = new Predictor(defaultConfig(16, 42)).predict(x).dataSync();
    expect(Array.from(a)).toEqual(Array.from(b));
  });

  it("saves and loads weights exactly", async () => {
    const fs = await import("fs");
    const os = await import("os");
    const path = await import("path");
    const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "cfp-"));
    const model = new Predictor(defaultConfig(16, 5));
    const x = tf.randomUniform([1, 16, 16, 5], 0, 1, "float32", 2) as tf.Tensor4D;
    const before = model.predict(x).dataSync();
    const file = path.join(tmp, "model.json");
    model.save(file);
    const loaded = Predictor.load(file);
    const after = loaded.predict(x).dataSync();
    expect(Array.from(after)).toEqual(Array.from(before));
  });
});

describe("training", () => {
  it("fits an all-zero target to near zero output", () => {
    const model = new Predictor({ n: 8, inChannels: 5, stages: 1, baseFilters: 4, seed: 1 });
    const xs = tf.randomUniform([8, 8, 8, 5], 0, 1, "float32", 9) as tf.Tensor4D;
    const ys = tf.zeros([8, 8, 8, 1]) as tf.Tensor4D;
    const curve = train(model, xs, ys, { epochs: 30, batchSize: 8, learningRate: 0.05, seed: 3 });
    expect(curve[curve.length - 1]).toBeLessThan(0.05);
  });

  it("training MAE strictly decreases over epochs on a small set", () => {
    const model = new Predictor({ n: 8, inChannels: 5, stages: 1, baseFilters: 8, seed: 2 });
    const xs = tf.randomUniform([12, 8, 8, 5], 0, 1, "float32", 17) as tf.Tensor4D;
    // a learnable structured target: reproduce the agent-density channel
    const ys = tf.slice(xs, [0, 0, 0, 2], [12, 8, 8, 1]) as tf.Tensor4D;
    const curve = train(model, xs, ys, {
      epochs: 10,
      batchSize: 12,
      learningRate: 0.05,
      seed: 5,
      shuffle: false,
    });
    for (let i = 1; i < curve.length; i++) {
      expect(curve[i]).toBeLessThan(curve[i - 1]);
    }
  });

  it("same seed reproduces identical loss curves", () => {
    const make = () => {
      const model = new Predictor({ n: 8, inChannels: 5, stages: 1, baseFilters: 4, seed: 4 });
      const xs = tf.randomUniform([6, 8, 8, 5], 0, 1, "float32", 21) as tf.Tensor4D;
      const ys = tf.mean(xs, 3, true) as tf.Tensor4D;
      return train(model, xs, ys, { epochs: 4, batchSize: 3, learningRate: 0.01, seed: 6 });
    };
    expect(make()).toEqual(make());
  });
});

describe("metrics", () => {
  it("matches the toolkit closed forms", () => {
    const m = new Float32Array([0.3, 0.7, 0.1, 0.9]);
    expect(mae(m, m)).toBe(0);
    expect(klDivergence(m, m)).toBe(0);
    const point = new Float32Array([1, 0, 0, 0]);
    const uniform = new Float32Array([0.25, 0.25, 0.25, 0.25]);
    expect(Math.abs(klDivergence(uniform, point) - Math.log(4))).toBeLessThan(1e-9);
  });

  it("masks obstacle cells", () => {
    const pred = new Float32Array([0.5, 99, 0.5, 99]);
    const truth = new Float32Array([0.5, 0, 0.5, 0]);
    const nav = new Uint8Array([1, 0, 1, 0]);
    expect(mae(pred, truth, nav)).toBe(0);
  });

  it("emits the shared CSV schema", () => {
    const csv = rowsToCsv([{ case_id: "mono:a", regime: "sparse", goal: "G", mae: 0.1, kl: 0.2 }]);
    expect(csv.split("\n")[0]).toBe("case_id,regime,goal,mae,kl");
  });

  it("mulberry32 is stable", () => {
    const r = mulberry32(1);
    const seq = [r(), r(), r()];
    const r2 = mulberry32(1);
    expect([r2(), r2(), r2()]).toEqual(seq);
  });
});
