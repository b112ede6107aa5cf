/**
 * Mono/dual ensembling: the mono model is trained on mixed crowds; the dual
 * ensemble keeps the mono model for dense inputs and routes sparse inputs
 * to a model trained solely on sparse crowds.
 */

import * as tf from "@tensorflow/tfjs";

import { Sample } from "./dataset";
import { Predictor } from "./model";

export class DualEnsemble {
  constructor(
    readonly mono: Predictor,
    readonly sparseModel: Predictor,
  ) {}

  modelFor(regime: string): Predictor {
    return regime === "dense" ? this.mono : this.sparseModel;
  }

  predict(sample: Sample): tf.Tensor4D {
    const x = sample.x.expandDims(0) as tf.Tensor4D;
    return this.modelFor(sample.record.regime).predict(x);
  }
}
