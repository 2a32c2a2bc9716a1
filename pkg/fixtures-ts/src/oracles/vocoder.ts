/**
 * Reference decoder-side forward passes: the conditioning stack (input conv
 * with one frame of lookahead, three dilated causal convs, three stride-2
 * transpose convs, linear projection, tiling) and the teacher-forced
 * negative log-likelihood over QMF band samples.
 */

import { Mat } from "./linalg";
import { conv1d, transposeConv1d } from "./conv";
import { GruWeights, gruStep } from "./gru";
import { MolParams, logLikelihood } from "./mol";
import { analyze } from "./qmf";

export interface CondStack {
  convInW: Float64Array; // (hidden, nMels, 3)
  convInB: Float64Array;
  dilW: Float64Array[]; // (hidden, hidden, 2) x3
  dilB: Float64Array[];
  upW: Float64Array[]; // (hidden, hidden, 4) x3
  upB: Float64Array[];
  projW: Mat; // (gru, hidden)
  projB: Float64Array;
  hidden: number;
  nMels: number;
  dilations: number[];
  tile: number;
}

export interface VocoderNet {
  cond: CondStack;
  gru: GruWeights;
  arW: Mat; // (gru, bands)
  arB: Float64Array;
  molW: Mat; // (bands*3*k, gru)
  molB: Float64Array;
  bands: number;
  nMix: number;
  scaleFloor: number;
  qmfPrototype: Float64Array;
}

function tanhBias(x: Mat, b: Float64Array): Mat {
  const out = x.copy();
  for (let t = 0; t < x.rows; t++)
    for (let c = 0; c < x.cols; c++) out.set(t, c, Math.tanh(out.get(t, c) + b[c]));
  return out;
}

export function conditioning(features: Mat, s: CondStack): Mat {
  let h = tanhBias(conv1d(features, s.convInW, s.hidden, 3, 1, 1), s.convInB);
  for (let i = 0; i < 3; i++) {
    h = tanhBias(conv1d(h, s.dilW[i], s.hidden, 2, s.dilations[i], 0), s.dilB[i]);
  }
  for (let i = 0; i < 3; i++) {
    h = tanhBias(transposeConv1d(h, s.upW[i], s.hidden, 4, 2), s.upB[i]);
  }
  const projected = h.matmul(s.projW.transpose());
  for (let t = 0; t < projected.rows; t++)
    for (let c = 0; c < projected.cols; c++) projected.data[t * projected.cols + c] += s.projB[c];
  const out = Mat.zeros(projected.rows * s.tile, projected.cols);
  for (let t = 0; t < projected.rows; t++)
    for (let r = 0; r < s.tile; r++)
      out.data.set(projected.row(t), (t * s.tile + r) * projected.cols);
  return out;
}

export function teacherForcedNll(features: Mat, audio: Float64Array, net: VocoderNet): number {
  const levels = Math.log2(net.bands);
  const bands = analyze(audio, levels, net.qmfPrototype);
  const steps = bands[0].length;
  const cond = conditioning(features, net.cond);
  if (cond.rows !== steps) throw new Error(`steps ${steps} != conditioning ${cond.rows}`);
  const g = net.arW.rows;
  let h: Float64Array = new Float64Array(g);
  let total = 0;
  const k = net.nMix;
  for (let t = 0; t < steps; t++) {
    const prev = new Float64Array(net.bands);
    if (t > 0) for (let b = 0; b < net.bands; b++) prev[b] = bands[b][t - 1];
    const ar = net.arW.matvec(prev);
    const x = new Float64Array(g);
    for (let i = 0; i < g; i++) x[i] = cond.get(t, i) + ar[i] + net.arB[i];
    h = gruStep(h, x, net.gru);
    const raw = net.molW.matvec(h);
    for (let b = 0; b < net.bands; b++) {
      const base = b * 3 * k;
      const p: MolParams = {
        logits: new Float64Array(k),
        means: new Float64Array(k),
        logScales: new Float64Array(k),
      };
      for (let j = 0; j < k; j++) {
        p.logits[j] = raw[base + j] + net.molB[base + j];
        p.means[j] = raw[base + k + j] + net.molB[base + k + j];
        p.logScales[j] = raw[base + 2 * k + j] + net.molB[base + 2 * k + j];
      }
      total += logLikelihood(bands[b][t], p, net.scaleFloor);
    }
  }
  return -total / (steps * net.bands);
}
