/** Synthetic test signals: pitched harmonics under a slow envelope, and
 * spectrally tilted noise. All deterministic via the counter generator. */

import { CounterRng } from "./rng";

export const SAMPLE_RATE = 16000;

export function harmonicSpeech(
  nSamples: number,
  seed: number,
  f0 = 150,
  peak = 0.7,
): Float64Array {
  const rng = new CounterRng(seed);
  const phases = rng.uniforms(8);
  const amps = [0.5, 0.35, 0.25, 0.18, 0.12, 0.08, 0.05, 0.03];
  const out = new Float64Array(nSamples);
  for (let i = 0; i < nSamples; i++) {
    const t = i / SAMPLE_RATE;
    let v = 0;
    for (let k = 0; k < 8; k++) {
      v += amps[k] * Math.sin(2 * Math.PI * f0 * (k + 1) * t + 2 * Math.PI * phases[k]);
    }
    out[i] = v * (0.55 + 0.45 * Math.sin(2 * Math.PI * 2.7 * t + phases[0]));
  }
  let max = 0;
  for (const v of out) max = Math.max(max, Math.abs(v));
  for (let i = 0; i < nSamples; i++) out[i] = (peak * out[i]) / max;
  return out;
}

/** White noise with optional high-frequency emphasis (first difference mix). */
export function tiltedNoise(nSamples: number, seed: number, emphasis = 0.45, peak = 0.5): Float64Array {
  const rng = new CounterRng(seed);
  const white = rng.normals(nSamples);
  const out = new Float64Array(nSamples);
  out[0] = white[0];
  for (let i = 1; i < nSamples; i++) out[i] = white[i] - emphasis * white[i - 1];
  let max = 0;
  for (const v of out) max = Math.max(max, Math.abs(v));
  for (let i = 0; i < nSamples; i++) out[i] = (peak * out[i]) / max;
  return out;
}

/** Band-limited noise built from random sinusoids inside [fLo, fHi]. */
export function bandNoise(
  nSamples: number,
  seed: number,
  fLo: number,
  fHi: number,
  nTones = 40,
  peak = 0.5,
): Float64Array {
  const rng = new CounterRng(seed);
  const out = new Float64Array(nSamples);
  for (let tone = 0; tone < nTones; tone++) {
    const f = fLo + (fHi - fLo) * rng.uniform();
    const phase = 2 * Math.PI * rng.uniform();
    const amp = 0.5 + rng.uniform();
    for (let i = 0; i < nSamples; i++) {
      out[i] += amp * Math.sin((2 * Math.PI * f * i) / SAMPLE_RATE + phase);
    }
  }
  let max = 0;
  for (const v of out) max = Math.max(max, Math.abs(v));
  for (let i = 0; i < nSamples; i++) out[i] = (peak * out[i]) / max;
  return out;
}

export function mixAtSnrDb(speech: Float64Array, noise: Float64Array, snrDb: number): Float64Array {
  let ps = 0;
  let pn = 0;
  for (let i = 0; i < speech.length; i++) {
    ps += speech[i] ** 2;
    pn += noise[i % noise.length] ** 2;
  }
  ps /= speech.length;
  pn /= speech.length;
  const gain = Math.sqrt(ps / (pn * 10 ** (snrDb / 10)));
  const out = new Float64Array(speech.length);
  let peak = 0;
  for (let i = 0; i < speech.length; i++) {
    out[i] = speech[i] + gain * noise[i % noise.length];
    peak = Math.max(peak, Math.abs(out[i]));
  }
  if (peak > 1) for (let i = 0; i < out.length; i++) out[i] /= peak;
  return out;
}

export function toF32(x: Float64Array): Float32Array {
  return Float32Array.from(x);
}
