/**
 * Evaluation metrics mirroring the dataset toolkit's semantics: metrics run
 * over navigable cells only, and the divergence is D(truth || prediction)
 * with exactly-zero prediction cells floored at epsilon.
 */

export const KL_EPS = 1e-9;

function masked(pred: ArrayLike<number>, truth: ArrayLike<number>, nav?: Uint8Array): [number[], number[]] {
  if (pred.length !== truth.length) throw new Error("maps differ in size");
  const a: number[] = [];
  const b: number[] = [];
  for (let i = 0; i < pred.length; i++) {
    if (!nav || nav[i]) {
      a.push(pred[i]);
      b.push(truth[i]);
    }
  }
  return [a, b];
}

export function mae(pred: ArrayLike<number>, truth: ArrayLike<number>, nav?: Uint8Array): number {
  const [a, b] = masked(pred, truth, nav);
  let acc = 0;
  for (let i = 0; i < a.length; i++) acc += Math.abs(a[i] - b[i]);
  return acc / a.length;
}

export function klDivergence(
  pred: ArrayLike<number>,
  truth: ArrayLike<number>,
  nav?: Uint8Array,
  eps = KL_EPS,
): number {
  const [a, b] = masked(pred, truth, nav);
  let sa = 0;
  let sb = 0;
  for (let i = 0; i < a.length; i++) {
    sa += a[i];
    sb += b[i];
  }
  if (sa <= 0 || sb <= 0) throw new Error("klDivergence needs a nonzero cell in each map");
  let acc = 0;
  for (let i = 0; i < a.length; i++) {
    const p = b[i] / sb;
    if (p <= 0) continue;
    const q = a[i] > 0 ? a[i] / sa : eps;
    acc += p * (Math.log(p) - Math.log(q));
  }
  return Math.max(0, acc);
}

export interface EvalRow {
  case_id: string;
  regime: string;
  goal: "E" | "G";
  mae: number;
  kl: number;
}

export function rowsToCsv(rows: EvalRow[]): string {
  const lines = ["case_id,regime,goal,mae,kl"];
  for (const r of rows) lines.push(`${r.case_id},${r.regime},${r.goal},${r.mae},${r.kl}`);
  return lines.join("\n") + "\n";
}

/** Sparse crowds exercise the goal-seeking objective, dense the environment one. */
export function goalTag(regime: string): "E" | "G" {
  return regime === "sparse" ? "G" : "E";
}
