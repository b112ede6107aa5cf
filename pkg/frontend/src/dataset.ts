/**
 * Loading cageflow dataset directories: manifest.json plus per-sample
 * x.tensor (5 channels) and y.tensor (1 channel) pairs.
 */

import * as fs from "fs";
import * as path from "path";
import * as tf from "@tensorflow/tfjs";

import { channel, readTensor } from "./tensorio";

export interface SampleRecord {
  id: string;
  group: string;
  regime: "sparse" | "dense";
  source: string;
  seed: number;
  files: { x: string; y: string; plan: string };
  [key: string]: unknown;
}

export interface Manifest {
  format_version: number;
  n: number;
  master_seed: number;
  groups: string[];
  count_per_group: number;
  samples: SampleRecord[];
}

export interface Sample {
  record: SampleRecord;
  /** [n, n, 5] input channels in order [Cx, Cy, A, G, E] */
  x: tf.Tensor3D;
  /** [n, n, 1] target flow */
  y: tf.Tensor3D;
  /** navigable mask at compressed resolution, [n, n] */
  nav: Uint8Array;
}

export function readManifest(dir: string): Manifest {
  return JSON.parse(fs.readFileSync(path.join(dir, "manifest.json"), "utf-8")) as Manifest;
}

export function loadSample(dir: string, record: SampleRecord): Sample {
  const xt = readTensor(path.join(dir, record.files.x));
  const yt = readTensor(path.join(dir, record.files.y));
  const n = xt.header.rows;
  if (xt.header.channels !== 5) throw new Error(`${record.id}: expected 5 channels`);
  if (yt.header.rows !== n || yt.header.cols !== n) {
    throw new Error(`${record.id}: x/y resolution mismatch`);
  }
  // channels-last layout for convolutions
  const x = new Float32Array(n * n * 5);
  for (let c = 0; c < 5; c++) {
    const src = channel(xt, c);
    for (let i = 0; i < n * n; i++) x[i * 5 + c] = src[i];
  }
  const e = channel(xt, 4);
  const nav = new Uint8Array(n * n);
  for (let i = 0; i < n * n; i++) nav[i] = e[i] > 0.5 ? 1 : 0;
  return {
    record,
    x: tf.tensor3d(x, [n, n, 5]),
    y: tf.tensor3d(channel(yt, 0), [n, n, 1]),
    nav,
  };
}

export function loadDataset(dir: string, filter?: (r: SampleRecord) => boolean): Sample[] {
  const manifest = readManifest(dir);
  const records = filter ? manifest.samples.filter(filter) : manifest.samples;
  return records.map((r) => loadSample(dir, r));
}

/** Deterministic 90/10 split by manifest order. */
export function trainValSplit<T>(items: T[], valFraction = 0.1): { train: T[]; val: T[] } {
  const nVal = Math.max(1, Math.floor(items.length * valFraction));
  return { train: items.slice(0, items.length - nVal), val: items.slice(items.length - nVal) };
}

export function stack(samples: Sample[]): { xs: tf.Tensor4D; ys: tf.Tensor4D } {
  return {
    xs: tf.stack(samples.map((s) => s.x)) as tf.Tensor4D,
    ys: tf.stack(samples.map((s) => s.y)) as tf.Tensor4D,
  };
}
