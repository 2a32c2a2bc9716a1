/**
 * Direct two-band QMF cascade: h1[n] = (-1)^n h0[n], synthesis g0 = h0,
 * g1 = -h1, keep-even decimation, zero-stuff upsampling. Levels applied
 * recursively to both branches; tree band order. Reconstruction delay is
 * (2^levels - 1) * (taps - 1) samples.
 */

export const HAAR_PROTOTYPE = Float64Array.from([Math.SQRT1_2, Math.SQRT1_2]);

export const DEFAULT_PROTOTYPE = Float64Array.from([
  -7.0046072284458028e-4, 1.1592560796230565e-4, -4.3745118178715589e-3,
  2.311551031145339e-2, -1.9098614404924211e-3, -1.1630872595110571e-1,
  1.2053942509875261e-1, 6.8657478842656927e-1, 6.8657478842656927e-1,
  1.2053942509875261e-1, -1.1630872595110571e-1, -1.9098614404924211e-3,
  2.311551031145339e-2, -4.3745118178715589e-3, 1.1592560796230565e-4,
  -7.0046072284458028e-4,
]);

function convolveSameLeft(x: Float64Array, h: Float64Array): Float64Array {
  const out = new Float64Array(x.length);
  for (let n = 0; n < x.length; n++) {
    let acc = 0;
    for (let k = 0; k < h.length; k++) {
      const src = n - k;
      if (src >= 0) acc += h[k] * x[src];
    }
    out[n] = acc;
  }
  return out;
}

function mirror(h0: Float64Array): Float64Array {
  const h1 = new Float64Array(h0.length);
  for (let n = 0; n < h0.length; n++) h1[n] = n % 2 === 0 ? h0[n] : -h0[n];
  return h1;
}

function analyzeOnce(x: Float64Array, h0: Float64Array): [Float64Array, Float64Array] {
  const h1 = mirror(h0);
  const lo = convolveSameLeft(x, h0);
  const hi = convolveSameLeft(x, h1);
  const half = Math.floor(x.length / 2);
  const dLo = new Float64Array(half);
  const dHi = new Float64Array(half);
  for (let i = 0; i < half; i++) {
    dLo[i] = lo[2 * i];
    dHi[i] = hi[2 * i];
  }
  return [dLo, dHi];
}

function synthesizeOnce(lo: Float64Array, hi: Float64Array, h0: Float64Array): Float64Array {
  const h1 = mirror(h0);
  const upLo = new Float64Array(2 * lo.length);
  const upHi = new Float64Array(2 * hi.length);
  for (let i = 0; i < lo.length; i++) {
    upLo[2 * i] = lo[i];
    upHi[2 * i] = hi[i];
  }
  const a = convolveSameLeft(upLo, h0);
  const b = convolveSameLeft(upHi, h1);
  const out = new Float64Array(a.length);
  for (let i = 0; i < out.length; i++) out[i] = a[i] - b[i];
  return out;
}

export function analyze(x: Float64Array, levels: number, h0: Float64Array = DEFAULT_PROTOTYPE): Float64Array[] {
  if (levels === 0) return [x.slice()];
  const [lo, hi] = analyzeOnce(x, h0);
  return [...analyze(lo, levels - 1, h0), ...analyze(hi, levels - 1, h0)];
}

export function synthesize(bands: Float64Array[], h0: Float64Array = DEFAULT_PROTOTYPE): Float64Array {
  if (bands.length === 1) return bands[0].slice();
  const half = bands.length / 2;
  const lo = synthesize(bands.slice(0, half), h0);
  const hi = synthesize(bands.slice(half), h0);
  return synthesizeOnce(lo, hi, h0);
}

export function groupDelay(levels: number, taps: number): number {
  return (2 ** levels - 1) * (taps - 1);
}

export function reconstructionSnrDb(x: Float64Array, levels: number, h0: Float64Array = DEFAULT_PROTOTYPE): number {
  const y = synthesize(analyze(x, levels, h0), h0);
  const d = groupDelay(levels, h0.length);
  let sig = 0;
  let err = 0;
  for (let i = 0; i + d < Math.min(y.length, x.length); i++) {
    sig += x[i] * x[i];
    const e = y[i + d] - x[i];
    err += e * e;
  }
  return 10 * Math.log10(sig / err);
}
