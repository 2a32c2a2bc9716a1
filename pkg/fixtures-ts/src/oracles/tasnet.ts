/**
 * Reference forward pass of the causal ConvTASNet enhancer, matching the
 * documented pipeline: strided frames, analysis filterbank, mask network
 * (inverted-bottleneck depthwise blocks with skips, no normalization),
 * stride-1 transpose-conv head with sigmoid, mask delay L against the
 * mixture path, coverage-normalized overlap-add synthesis.
 */

import { Mat } from "./linalg";
import { depthwiseConv1d, transposeConv1d } from "./conv";

export interface TasBlock {
  inW: Mat; // (channels, hidden)
  inB: Float64Array;
  inAlpha: Float64Array;
  dwW: Mat; // (channels, kernel)
  dwB: Float64Array;
  dwAlpha: Float64Array;
  outW: Mat; // (hidden, channels)
  outB: Float64Array;
  dilation: number;
}

export interface TasNet {
  fbIn: Mat; // (F, W)
  fbMask: Mat; // (F', W)
  fbOut: Mat; // (F, W)
  blocks: TasBlock[];
  maskOutW: Float64Array; // (F, F', kernel) row-major
  maskOutB: Float64Array;
  maskOutKernel: number;
  window: number;
  stride: number;
  lookaheadFrames: number;
}

function prelu(x: Mat, alpha: Float64Array): Mat {
  const out = x.copy();
  for (let t = 0; t < x.rows; t++)
    for (let c = 0; c < x.cols; c++) {
      const v = out.get(t, c);
      if (v < 0) out.set(t, c, alpha[c] * v);
    }
  return out;
}

function addBias(x: Mat, b: Float64Array): Mat {
  const out = x.copy();
  for (let t = 0; t < x.rows; t++) for (let c = 0; c < x.cols; c++) out.data[t * x.cols + c] += b[c];
  return out;
}

function frames(x: Float64Array, window: number, stride: number): Mat {
  const n = Math.ceil(x.length / stride);
  const out = Mat.zeros(n, window);
  for (let t = 0; t < n; t++)
    for (let i = 0; i < window; i++) {
      const src = t * stride + i;
      if (src < x.length) out.set(t, i, x[src]);
    }
  return out;
}

export function computeMasks(features: Mat, net: TasNet): Mat {
  let y = features;
  for (const block of net.blocks) {
    let a = prelu(addBias(y.matmul(block.inW.transpose()), block.inB), block.inAlpha);
    a = prelu(addBias(depthwiseConv1d(a, block.dwW, block.dilation), block.dwB), block.dwAlpha);
    const residual = addBias(a.matmul(block.outW.transpose()), block.outB);
    const next = y.copy();
    for (let i = 0; i < next.data.length; i++) next.data[i] += residual.data[i];
    y = next;
  }
  const logits = addBias(
    transposeConv1d(y, net.maskOutW, net.fbIn.rows, net.maskOutKernel, 1),
    net.maskOutB,
  );
  const masks = logits.copy();
  for (let i = 0; i < masks.data.length; i++) masks.data[i] = 1 / (1 + Math.exp(-masks.data[i]));
  return masks;
}

export function denoise(audio: Float64Array, net: TasNet): Float64Array {
  const n = audio.length;
  if (n === 0) return new Float64Array(0);
  const L = net.lookaheadFrames;
  const padded = new Float64Array(n + L * net.stride);
  padded.set(audio);
  const framed = frames(padded, net.window, net.stride);
  const nContent = Math.ceil(n / net.stride);
  const fbAll = framed.matmul(net.fbMask.transpose());
  const masks = computeMasks(fbAll, net);
  const out = new Float64Array(nContent * net.stride + net.window);
  const coverage = new Float64Array(out.length);
  for (let t = 0; t < nContent; t++) {
    // masked analysis frame, then synthesis chunk = fbOut^T masked
    const chunk = new Float64Array(net.window);
    for (let f = 0; f < net.fbIn.rows; f++) {
      let fb = 0;
      for (let w = 0; w < net.window; w++) fb += net.fbIn.get(f, w) * framed.get(t, w);
      const masked = fb * masks.get(t + L, f);
      for (let w = 0; w < net.window; w++) chunk[w] += net.fbOut.get(f, w) * masked;
    }
    for (let w = 0; w < net.window; w++) {
      out[t * net.stride + w] += chunk[w];
      coverage[t * net.stride + w] += 1;
    }
  }
  const result = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    result[i] = Math.max(-1, Math.min(1, out[i] / Math.max(coverage[i], 1)));
  }
  return result;
}
