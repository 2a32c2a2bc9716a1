/**
 * Reference GRU step. The candidate's recurrent term carries the bias inside
 * the reset gate:
 *
 *   r  = sigma(Wr x + Ur h + br)
 *   z  = sigma(Wz x + Uz h + bz)
 *   n  = tanh(Wn x + r * (Un h + bn))
 *   h' = (1 - z) h + z n
 */

import { Mat } from "./linalg";

function sigmoid(v: number): number {
  return v >= 0 ? 1 / (1 + Math.exp(-v)) : Math.exp(v) / (1 + Math.exp(v));
}

export interface GruWeights {
  wr: Mat;
  wz: Mat;
  wn: Mat;
  ur: Mat;
  uz: Mat;
  un: Mat;
  br: Float64Array;
  bz: Float64Array;
  bn: Float64Array;
}

export function gruStep(h: Float64Array, x: Float64Array, w: GruWeights): Float64Array {
  const d = h.length;
  const wrx = w.wr.matvec(x);
  const wzx = w.wz.matvec(x);
  const wnx = w.wn.matvec(x);
  const urh = w.ur.matvec(h);
  const uzh = w.uz.matvec(h);
  const unh = w.un.matvec(h);
  const out = new Float64Array(d);
  for (let i = 0; i < d; i++) {
    const r = sigmoid(wrx[i] + urh[i] + w.br[i]);
    const z = sigmoid(wzx[i] + uzh[i] + w.bz[i]);
    const n = Math.tanh(wnx[i] + r * (unh[i] + w.bn[i]));
    out[i] = (1 - z) * h[i] + z * n;
  }
  return out;
}
