export { readTensor, writeTensor, channel, TensorFile, TensorHeader } from "./tensorio";
export { readManifest, loadDataset, loadSample, trainValSplit, stack, Sample, SampleRecord, Manifest } from "./dataset";
export { mae, klDivergence, rowsToCsv, goalTag, EvalRow, KL_EPS } from "./metrics";
export { Predictor, ModelConfig, defaultConfig, unpool } from "./model";
export { train, TrainSpec, DEFAULT_TRAIN, maeLoss, mulberry32 } from "./train";
export { DualEnsemble } from "./ensemble";
export { evaluateEnsemble, Evaluation, Aggregate } from "./evaluate";
