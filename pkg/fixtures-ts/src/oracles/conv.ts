/**
 * Reference convolutions, written as direct summations of the defining
 * formulas. Inputs are time-major (T, C) matrices.
 */

import { Mat } from "./linalg";

/** kernel: (cOut, cIn, width) flattened row-major; tap j reads lag j*dilation. */
export function conv1d(
  x: Mat,
  kernel: Float64Array,
  cOut: number,
  width: number,
  dilation: number,
  lookahead: number,
): Mat {
  const T = x.rows;
  const cIn = x.cols;
  const out = Mat.zeros(T, cOut);
  for (let t = 0; t < T; t++) {
    for (let j = 0; j < width; j++) {
      const src = t + lookahead - j * dilation;
      if (src < 0 || src >= T) continue;
      for (let o = 0; o < cOut; o++) {
        let acc = 0;
        for (let c = 0; c < cIn; c++) acc += kernel[(o * cIn + c) * width + j] * x.get(src, c);
        out.data[t * cOut + o] += acc;
      }
    }
  }
  return out;
}

export function depthwiseConv1d(x: Mat, kernels: Mat, dilation: number): Mat {
  const T = x.rows;
  const C = x.cols;
  const width = kernels.cols;
  const out = Mat.zeros(T, C);
  for (let t = 0; t < T; t++) {
    for (let j = 0; j < width; j++) {
      const src = t - j * dilation;
      if (src < 0) continue;
      for (let c = 0; c < C; c++) out.data[t * C + c] += kernels.get(c, j) * x.get(src, c);
    }
  }
  return out;
}

/** Zero-stuff by `stride`, then convolve; cropped to stride * T rows. */
export function transposeConv1d(
  x: Mat,
  kernel: Float64Array,
  cOut: number,
  width: number,
  stride: number,
): Mat {
  const T = x.rows;
  const cIn = x.cols;
  const out = Mat.zeros(stride * T, cOut);
  for (let t = 0; t < T; t++) {
    for (let w = 0; w < width; w++) {
      const pos = stride * t + w;
      if (pos >= stride * T) continue;
      for (let o = 0; o < cOut; o++) {
        let acc = 0;
        for (let c = 0; c < cIn; c++) acc += kernel[(o * cIn + c) * width + w] * x.get(t, c);
        out.data[pos * cOut + o] += acc;
      }
    }
  }
  return out;
}
