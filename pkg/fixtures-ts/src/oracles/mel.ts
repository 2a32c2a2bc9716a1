/**
 * Log-melspectrum reference: direct DFT (no FFT), periodic Hann window,
 * power spectra, unnormalized HTK-scale triangles over 125-7500 Hz,
 * natural-log floor 1e-10. Framing: frame t covers [t*hop, t*hop + window),
 * zero-padded at the tail, ceil(N / hop) frames.
 */

import { Mat } from "./linalg";

export interface MelSetup {
  sampleRate: number;
  window: number;
  hop: number;
  fftSize: number;
  nMels: number;
  fminHz: number;
  fmaxHz: number;
  logFloor: number;
}

export const DEFAULT_MEL: MelSetup = {
  sampleRate: 16000,
  window: 1280,
  hop: 640,
  fftSize: 2048,
  nMels: 160,
  fminHz: 125,
  fmaxHz: 7500,
  logFloor: 1e-10,
};

export function hzToMel(f: number): number {
  return 2595 * Math.log10(1 + f / 700);
}

export function melToHz(m: number): number {
  return 700 * (10 ** (m / 2595) - 1);
}

export function melTriangles(setup: MelSetup): Mat {
  const bins = setup.fftSize / 2 + 1;
  const edges: number[] = [];
  const lo = hzToMel(setup.fminHz);
  const hi = hzToMel(setup.fmaxHz);
  for (let i = 0; i < setup.nMels + 2; i++) edges.push(melToHz(lo + ((hi - lo) * i) / (setup.nMels + 1)));
  const out = Mat.zeros(setup.nMels, bins);
  for (let m = 0; m < setup.nMels; m++) {
    const [a, b, c] = [edges[m], edges[m + 1], edges[m + 2]];
    for (let k = 0; k < bins; k++) {
      const f = (k * setup.sampleRate) / setup.fftSize;
      const rise = (f - a) / (b - a);
      const fall = (c - f) / (c - b);
      out.set(m, k, Math.max(0, Math.min(rise, fall)));
    }
  }
  return out;
}

export function hannPeriodic(n: number): Float64Array {
  const w = new Float64Array(n);
  for (let i = 0; i < n; i++) w[i] = 0.5 - 0.5 * Math.cos((2 * Math.PI * i) / n);
  return w;
}

/** O(n^2) real-DFT power spectrum of a windowed frame zero-padded to fftSize. */
export function dftPower(frame: Float64Array, fftSize: number): Float64Array {
  const bins = fftSize / 2 + 1;
  const out = new Float64Array(bins);
  for (let k = 0; k < bins; k++) {
    let re = 0;
    let im = 0;
    for (let n = 0; n < frame.length; n++) {
      const phase = (2 * Math.PI * k * n) / fftSize;
      re += frame[n] * Math.cos(phase);
      im -= frame[n] * Math.sin(phase);
    }
    out[k] = re * re + im * im;
  }
  return out;
}

export function logMel(audio: Float64Array, setup: MelSetup = DEFAULT_MEL): Mat {
  const nFrames = Math.ceil(audio.length / setup.hop);
  const triangles = melTriangles(setup);
  const window = hannPeriodic(setup.window);
  const out = Mat.zeros(nFrames, setup.nMels);
  const frame = new Float64Array(setup.window);
  for (let t = 0; t < nFrames; t++) {
    frame.fill(0);
    for (let i = 0; i < setup.window; i++) {
      const src = t * setup.hop + i;
      if (src < audio.length) frame[i] = audio[src] * window[i];
    }
    const power = dftPower(frame, setup.fftSize);
    for (let m = 0; m < setup.nMels; m++) {
      let acc = 0;
      for (let k = 0; k < power.length; k++) acc += triangles.get(m, k) * power[k];
      out.set(t, m, Math.log(Math.max(acc, setup.logFloor)));
    }
  }
  return out;
}
