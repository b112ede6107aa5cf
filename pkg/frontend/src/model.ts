/**
 * Encoder-decoder flow predictor: paired 3x3 convolutions per stage, 2x2
 * max pooling whose argmax indices drive sparse upsampling in the mirrored
 * decoder, and a sigmoid head so every output lands in [0, 1]. Depth
 * shrinks with the input resolution, dropping the outer stages the way the
 * full-resolution architecture sheds layers for smaller inputs.
 */

import * as fs from "fs";
import * as tf from "@tensorflow/tfjs";

export interface ModelConfig {
  n: number;
  inChannels: number;
  stages: number;
  baseFilters: number;
  seed: number;
}

export function defaultConfig(n: number, seed = 0): ModelConfig {
  // one pooling stage per halving that keeps the bottleneck at >= 4 cells
  const stages = Math.max(1, Math.min(3, Math.floor(Math.log2(n)) - 2));
  return { n, inChannels: 5, stages, baseFilters: 16, seed };
}

function product(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

/** Sparse upsampling: scatter pooled values back to their argmax positions. */
export function unpool(
  pooled: tf.Tensor4D,
  indexes: tf.Tensor,
  outShape: [number, number, number, number],
): tf.Tensor4D {
  // indexes ride along as a float input so the engine saves them for the
  // backward pass (closures over intermediates get disposed); values are
  // exact in float32 for any grid this package emits
  const op = tf.customGrad((...args: Array<tf.Tensor | tf.GradSaveFunc>) => {
    const p = args[0] as tf.Tensor;
    const idxF = args[1] as tf.Tensor;
    const save = args[2] as tf.GradSaveFunc;
    save([idxF]);
    const value = tf
      .scatterND(idxF.toInt().reshape([-1, 1]), p.reshape([-1]), [product(outShape)])
      .reshape(outShape);
    const gradFunc = (dy: tf.Tensor, saved: tf.Tensor[]) => {
      const sidx = saved[0].reshape([-1]).toInt();
      return [
        tf.gather(dy.reshape([-1]), sidx).reshape(p.shape),
        tf.zerosLike(saved[0]),
      ];
    };
    return { value, gradFunc };
  });
  return op(pooled, indexes.toFloat()) as tf.Tensor4D;
}

export class Predictor {
  private static instances = 0;

  readonly config: ModelConfig;
  readonly variables = new Map<string, tf.Variable>();

  constructor(config: ModelConfig) {
    this.config = config;
    // tf registers variable names globally; prefix per instance
    const uid = `p${Predictor.instances++}`;
    let seed = config.seed;
    const conv = (name: string, inC: number, outC: number) => {
      seed += 1;
      const init = tf.initializers.heNormal({ seed });
      this.variables.set(
        `${name}/kernel`,
        tf.variable(init.apply([3, 3, inC, outC]) as tf.Tensor, true, `${uid}/${name}/kernel`),
      );
      this.variables.set(
        `${name}/bias`,
        tf.variable(tf.zeros([outC]), true, `${uid}/${name}/bias`),
      );
    };
    let inC = config.inChannels;
    for (let s = 0; s < config.stages; s++) {
      const outC = config.baseFilters << Math.min(s, 2);
      conv(`enc${s}a`, inC, outC);
      conv(`enc${s}b`, outC, outC);
      inC = outC;
    }
    for (let s = config.stages - 1; s >= 0; s--) {
      const outC = s > 0 ? this.config.baseFilters << Math.min(s - 1, 2) : config.baseFilters;
      conv(`dec${s}a`, inC, inC);
      conv(`dec${s}b`, inC, outC);
      inC = outC;
    }
    seed += 1;
    const headInit = tf.initializers.heNormal({ seed });
    this.variables.set(
      "head/kernel",
      tf.variable(headInit.apply([1, 1, inC, 1]) as tf.Tensor, true, `${uid}/head/kernel`),
    );
    this.variables.set("head/bias", tf.variable(tf.zeros([1]), true, `${uid}/head/bias`));
  }

  private convRelu(name: string, x: tf.Tensor4D): tf.Tensor4D {
    const kernel = this.variables.get(`${name}/kernel`)! as tf.Tensor4D;
    const bias = this.variables.get(`${name}/bias`)!;
    return tf.relu(tf.add(tf.conv2d(x, kernel as unknown as tf.Tensor4D, 1, "same"), bias));
  }

  forward(x: tf.Tensor4D): tf.Tensor4D {
    return tf.tidy(() => {
      let h = x;
      const indices: tf.Tensor[] = [];
      const shapes: [number, number, number, number][] = [];
      for (let s = 0; s < this.config.stages; s++) {
        h = this.convRelu(`enc${s}a`, h);
        h = this.convRelu(`enc${s}b`, h);
        shapes.push(h.shape as [number, number, number, number]);
        // indices come from the argmax variant, detached from the autodiff
        // tape (the op has no registered gradient); the value path uses the
        // differentiable pool, which produces identical outputs
        const { indexes } = tf.maxPoolWithArgmax(h, 2, 2, "same", true);
        indices.push(tf.tensor(indexes.dataSync(), indexes.shape, "int32"));
        indexes.dispose();
        h = tf.maxPool(h, 2, 2, "same");
      }
      for (let s = this.config.stages - 1; s >= 0; s--) {
        h = unpool(h, indices[s], shapes[s]);
        h = this.convRelu(`dec${s}a`, h);
        h = this.convRelu(`dec${s}b`, h);
      }
      const headKernel = this.variables.get("head/kernel")! as unknown as tf.Tensor4D;
      const headBias = this.variables.get("head/bias")!;
      return tf.sigmoid(tf.add(tf.conv2d(h, headKernel, 1, "same"), headBias)) as tf.Tensor4D;
    });
  }

  predict(x: tf.Tensor4D): tf.Tensor4D {
    return tf.tidy(() => this.forward(x));
  }

  trainables(): tf.Variable[] {
    return [...this.variables.values()];
  }

  save(path: string): void {
    const payload: Record<string, { shape: number[]; data: string }> = {};
    for (const [name, v] of this.variables) {
      const arr = v.dataSync() as Float32Array;
      payload[name] = {
        shape: v.shape as number[],
        data: Buffer.from(arr.buffer, arr.byteOffset, arr.byteLength).toString("base64"),
      };
    }
    fs.writeFileSync(path, JSON.stringify({ config: this.config, weights: payload }));
  }

  static load(path: string): Predictor {
    const doc = JSON.parse(fs.readFileSync(path, "utf-8")) as {
      config: ModelConfig;
      weights: Record<string, { shape: number[]; data: string }>;
    };
    const model = new Predictor(doc.config);
    for (const [name, rec] of Object.entries(doc.weights)) {
      const buf = Buffer.from(rec.data, "base64");
      const arr = new Float32Array(buf.buffer, buf.byteOffset, buf.byteLength / 4);
      model.variables.get(name)!.assign(tf.tensor(Array.from(arr), rec.shape));
    }
    return model;
  }
}
