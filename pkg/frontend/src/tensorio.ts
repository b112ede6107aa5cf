/**
 * Reader/writer for the cageflow .tensor container: one newline-terminated
 * JSON header line followed by little-endian float32 channel data,
 * row-major, channels outermost. Bit-exact with the Python emitter.
 */

import * as fs from "fs";

export interface TensorHeader {
  version: number;
  kind: string;
  n: number;
  p: number;
  q: number;
  trim: number[];
  seed: number;
  channels: number;
  rows: number;
  cols: number;
  scale?: number;
}

export interface TensorFile {
  header: TensorHeader;
  /** [channels][rows*cols] row-major views into one buffer */
  data: Float32Array;
}

export function readTensor(path: string): TensorFile {
  const buf = fs.readFileSync(path);
  const nl = buf.indexOf(0x0a);
  if (nl < 0) throw new Error(`${path}: missing header line`);
  const header = JSON.parse(buf.subarray(0, nl).toString("utf-8")) as TensorHeader;
  const expected = header.channels * header.rows * header.cols;
  const payload = buf.subarray(nl + 1);
  if (payload.byteLength !== expected * 4) {
    throw new Error(`${path}: payload ${payload.byteLength} bytes, expected ${expected * 4}`);
  }
  // copy to a fresh aligned buffer; Buffer slices may be unaligned
  const data = new Float32Array(expected);
  for (let i = 0; i < expected; i++) data[i] = payload.readFloatLE(i * 4);
  return { header, data };
}

export function channel(t: TensorFile, c: number): Float32Array {
  const size = t.header.rows * t.header.cols;
  return t.data.subarray(c * size, (c + 1) * size);
}

export function writeTensor(path: string, header: TensorHeader, data: Float32Array): void {
  const full = { ...header, channels: header.channels, rows: header.rows, cols: header.cols };
  const sorted = Object.keys(full)
    .sort()
    .reduce((acc: Record<string, unknown>, key) => {
      acc[key] = (full as Record<string, unknown>)[key];
      return acc;
    }, {});
  const head = Buffer.from(JSON.stringify(sorted) + "\n", "utf-8");
  const payload = Buffer.alloc(data.length * 4);
  for (let i = 0; i < data.length; i++) payload.writeFloatLE(data[i], i * 4);
  fs.writeFileSync(path, Buffer.concat([head, payload]));
}
