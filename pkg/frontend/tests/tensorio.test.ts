import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { beforeAll, describe, expect, it } from "vitest";

import { channel, readTensor, writeTensor } from "../src/tensorio";
import { loadDataset, loadSample, readManifest, trainValSplit } from "../src/dataset";
import { FIXTURES } from "./setup";

const DIR = path.join(FIXTURES, "mixed");

describe("tensor container", () => {
  it("reads the emitted header and payload bit-exactly", () => {
    const manifest = readManifest(DIR);
    const rec = manifest.samples[0];
    const t = readTensor(path.join(DIR, rec.files.x));
    expect(t.header.kind).toBe("cage");
    expect(t.header.channels).toBe(5);
    expect(t.header.rows).toBe(manifest.n);
    expect(t.header.cols).toBe(manifest.n);
    expect(t.data.length).toBe(5 * manifest.n * manifest.n);
  });

  it("channel values honor the encoding invariants", () => {
    const manifest = readManifest(DIR);
    for (const rec of manifest.samples.slice(0, 8)) {
      const t = readTensor(path.join(DIR, rec.files.x));
      const [cx, cy, a, g, e] = [0, 1, 2, 3, 4].map((c) => channel(t, c));
      let mass = 0;
      for (let i = 0; i < a.length; i++) {
        expect(cx[i]).toBeGreaterThanOrEqual(1);
        expect(cy[i]).toBeGreaterThanOrEqual(1);
        expect(a[i]).toBeGreaterThanOrEqual(0);
        expect(a[i]).toBeLessThanOrEqual(1);
        expect(g[i]).toBeGreaterThanOrEqual(0);
        expect(g[i]).toBeLessThanOrEqual(1);
        expect(e[i] === 0 || e[i] === 1).toBe(true);
        if (e[i] === 0) expect(a[i]).toBe(0);
        mass += a[i] * cx[i] * cy[i];
      }
      // agent mass bookkeeping survives the trip through float32
      expect(Math.abs(mass - Math.round(mass))).toBeLessThan(1e-3);
      expect(Math.round(mass)).toBe(rec.agents);
    }
  });

  it("round-trips through the writer", () => {
    const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "cfp-"));
    const manifest = readManifest(DIR);
    const rec = manifest.samples[1];
    const t = readTensor(path.join(DIR, rec.files.y));
    const out = path.join(tmp, "copy.tensor");
    writeTensor(out, t.header, t.data);
    const back = readTensor(out);
    expect(back.header).toEqual(t.header);
    expect(Buffer.from(back.data.buffer).equals(Buffer.from(t.data.buffer))).toBe(true);
  });
});

describe("dataset loading", () => {
  it("loads samples with channels-last input and nav masks", () => {
    const manifest = readManifest(DIR);
    const sample = loadSample(DIR, manifest.samples[0]);
    expect(sample.x.shape).toEqual([manifest.n, manifest.n, 5]);
    expect(sample.y.shape).toEqual([manifest.n, manifest.n, 1]);
    const navCount = sample.nav.reduce((a, b) => a + b, 0);
    expect(navCount).toBeGreaterThan(0);
    // target flow stays inside [0, 1] and vanishes on obstacles
    const y = sample.y.dataSync();
    for (let i = 0; i < y.length; i++) {
      expect(y[i]).toBeGreaterThanOrEqual(0);
      expect(y[i]).toBeLessThanOrEqual(1 + 1e-6);
      if (!sample.nav[i]) expect(y[i]).toBe(0);
    }
  });

  it("filters by regime and splits deterministically by manifest order", () => {
    const sparse = loadDataset(DIR, (r) => r.regime === "sparse");
    expect(sparse.length).toBe(36);
    const { train, val } = trainValSplit(sparse);
    expect(train.length + val.length).toBe(sparse.length);
    expect(val.length).toBe(Math.max(1, Math.floor(sparse.length * 0.1)));
    const again = trainValSplit(loadDataset(DIR, (r) => r.regime === "sparse"));
    expect(again.val.map((s) => s.record.id)).toEqual(val.map((s) => s.record.id));
  });
});
