/**
 * Logistic-mixture reference math: softmax weights, per-component logistic
 * pdf/cdf, mixture density, analytic CDF, and closed-form gradients of the
 * negative log-likelihood with respect to the head parameters (used by the
 * toy trainer).
 */

export interface MolParams {
  logits: Float64Array;
  means: Float64Array;
  logScales: Float64Array;
}

export const SCALE_FLOOR = 1e-4;

export function softmax(v: Float64Array): Float64Array {
  let max = -Infinity;
  for (const x of v) max = Math.max(max, x);
  const out = new Float64Array(v.length);
  let sum = 0;
  for (let i = 0; i < v.length; i++) {
    out[i] = Math.exp(v[i] - max);
    sum += out[i];
  }
  for (let i = 0; i < v.length; i++) out[i] /= sum;
  return out;
}

function flooredScale(logScale: number, floor: number): number {
  return Math.exp(Math.max(logScale, Math.log(floor)));
}

export function logisticPdf(x: number, mean: number, scale: number): number {
  const z = Math.abs((x - mean) / scale);
  const e = Math.exp(-z);
  return e / (scale * (1 + e) ** 2);
}

export function logisticCdf(x: number, mean: number, scale: number): number {
  const z = (x - mean) / scale;
  return z >= 0 ? 1 / (1 + Math.exp(-z)) : Math.exp(z) / (1 + Math.exp(z));
}

export function mixturePdf(x: number, p: MolParams, floor = SCALE_FLOOR): number {
  const w = softmax(p.logits);
  let acc = 0;
  for (let j = 0; j < w.length; j++) {
    acc += w[j] * logisticPdf(x, p.means[j], flooredScale(p.logScales[j], floor));
  }
  return acc;
}

export function mixtureCdf(x: number, p: MolParams, floor = SCALE_FLOOR): number {
  const w = softmax(p.logits);
  let acc = 0;
  for (let j = 0; j < w.length; j++) {
    acc += w[j] * logisticCdf(x, p.means[j], flooredScale(p.logScales[j], floor));
  }
  return acc;
}

export function logLikelihood(x: number, p: MolParams, floor = SCALE_FLOOR): number {
  const w = softmax(p.logits);
  const k = w.length;
  const joint = new Float64Array(k);
  let peak = -Infinity;
  for (let j = 0; j < k; j++) {
    const ls = Math.max(p.logScales[j], Math.log(floor));
    const s = Math.exp(ls);
    const z = (x - p.means[j]) / s;
    const logPdf = -z - ls - 2 * softplus(-z);
    joint[j] = Math.log(w[j]) + logPdf;
    peak = Math.max(peak, joint[j]);
  }
  let acc = 0;
  for (let j = 0; j < k; j++) acc += Math.exp(joint[j] - peak);
  return peak + Math.log(acc);
}

function softplus(v: number): number {
  return v > 30 ? v : Math.log1p(Math.exp(v));
}

function sigmoid(v: number): number {
  return v >= 0 ? 1 / (1 + Math.exp(-v)) : Math.exp(v) / (1 + Math.exp(v));
}

export interface MolGrad {
  dLogits: Float64Array;
  dMeans: Float64Array;
  dLogScales: Float64Array;
}

/**
 * Gradient of -log p(x) w.r.t. logits, means and log-scales.
 * Components whose log-scale sits below the floor get zero scale gradient
 * (the floor clamp is flat there).
 */
export function nllGradient(x: number, p: MolParams, floor = SCALE_FLOOR): MolGrad {
  const k = p.logits.length;
  const w = softmax(p.logits);
  const gamma = new Float64Array(k); // posterior responsibilities
  let total = 0;
  const scales = new Float64Array(k);
  for (let j = 0; j < k; j++) {
    scales[j] = flooredScale(p.logScales[j], floor);
    gamma[j] = w[j] * logisticPdf(x, p.means[j], scales[j]);
    total += gamma[j];
  }
  const dLogits = new Float64Array(k);
  const dMeans = new Float64Array(k);
  const dLogScales = new Float64Array(k);
  if (total <= 0) return { dLogits, dMeans, dLogScales };
  for (let j = 0; j < k; j++) gamma[j] /= total;
  for (let j = 0; j < k; j++) {
    dLogits[j] = w[j] - gamma[j];
    const z = (x - p.means[j]) / scales[j];
    const dLogPdfDMean = (1 - 2 * sigmoid(-z)) / scales[j];
    dMeans[j] = -gamma[j] * dLogPdfDMean;
    const active = p.logScales[j] > Math.log(floor) ? 1 : 0;
    const dLogPdfDLogScale = z * (1 - 2 * sigmoid(-z)) - 1;
    dLogScales[j] = -gamma[j] * dLogPdfDLogScale * active;
  }
  return { dLogits, dMeans, dLogScales };
}
