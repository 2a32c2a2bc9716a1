import { describe, expect, it } from "vitest";

import { CounterRng } from "../src/rng";
import { Mat, inverse, symmetricEig } from "../src/oracles/linalg";
import { conv1d, depthwiseConv1d, transposeConv1d } from "../src/oracles/conv";
import { gruStep } from "../src/oracles/gru";
import * as mol from "../src/oracles/mol";
import { bandEnergyShares } from "../src/oracles/fft";
import * as qmf from "../src/oracles/qmf";
import { lloyd } from "../src/oracles/kmeans";
import { siSnr, siSnrImprovement, SI_SNR_CAP_DB } from "../src/oracles/sisnr";
import { conditioning } from "../src/oracles/vocoder";
import { harmonicSpeech } from "../src/audio";
import { identityishWeightSet, TOY_VOCODER } from "../src/weights";

describe("convolutions", () => {
  it("width-1 identity kernel passes input through", () => {
    const x = new Mat(6, 2, Float64Array.from(new CounterRng(1).normals(12)));
    const k = Float64Array.from([1, 0, 0, 1]); // (2, 2, 1) identity
    const y = conv1d(x, k, 2, 1, 1, 0);
    expect(Array.from(y.data)).toEqual(Array.from(x.data));
  });

  it("kernel [0, 1] with dilation 4 is a 4-step delay", () => {
    const x = new Mat(10, 1, Float64Array.from(new CounterRng(2).normals(10)));
    const y = conv1d(x, Float64Array.from([0, 1]), 1, 2, 4, 0);
    for (let t = 0; t < 4; t++) expect(y.get(t, 0)).toBe(0);
    for (let t = 4; t < 10; t++) expect(y.get(t, 0)).toBe(x.get(t - 4, 0));
  });

  it("transpose conv of an impulse copies the kernel at position 0", () => {
    const x = Mat.zeros(4, 1);
    x.set(0, 0, 1);
    const k = Float64Array.from([5, 6, 7]);
    const y = transposeConv1d(x, k, 1, 3, 2);
    expect(y.rows).toBe(8);
    expect([y.get(0, 0), y.get(1, 0), y.get(2, 0), y.get(3, 0)]).toEqual([5, 6, 7, 0]);
  });

  it("depthwise keeps channels independent", () => {
    const x = new Mat(8, 2, Float64Array.from(new CounterRng(3).normals(16)));
    const k = new Mat(2, 2, Float64Array.from([1, 0, 0, 1]));
    const y = depthwiseConv1d(x, k, 1);
    for (let t = 0; t < 8; t++) {
      expect(y.get(t, 0)).toBe(x.get(t, 0));
      expect(y.get(t, 1)).toBe(t === 0 ? 0 : x.get(t - 1, 1));
    }
  });
});

describe("gru", () => {
  it("all-zero weights halve the state", () => {
    const d = 5;
    const z = Mat.zeros(d, d);
    const b = new Float64Array(d);
    const h = Float64Array.from(new CounterRng(4).normals(d));
    const out = gruStep(h, new Float64Array(d), {
      wr: z, wz: z, wn: z, ur: z, uz: z, un: z, br: b, bz: b, bn: b,
    });
    for (let i = 0; i < d; i++) expect(out[i]).toBeCloseTo(0.5 * h[i], 12);
  });
});

describe("mixture of logistics", () => {
  it("peak density of one component is 1/(4s)", () => {
    for (const s of [0.01, 0.2]) {
      const p: mol.MolParams = {
        logits: Float64Array.from([0]),
        means: Float64Array.from([0.1]),
        logScales: Float64Array.from([Math.log(s)]),
      };
      expect(mol.logLikelihood(0.1, p)).toBeCloseTo(Math.log(1 / (4 * s)), 10);
    }
  });

  it("cdf is monotone with unit range", () => {
    const rng = new CounterRng(6);
    const p: mol.MolParams = {
      logits: Float64Array.from(rng.normals(4)),
      means: Float64Array.from(rng.normals(4)),
      logScales: Float64Array.from(rng.normals(4), (v) => v - 1.5),
    };
    let prev = -1;
    for (let x = -6; x <= 6; x += 0.05) {
      const c = mol.mixtureCdf(x, p);
      expect(c).toBeGreaterThanOrEqual(prev - 1e-12);
      prev = c;
    }
    expect(mol.mixtureCdf(-60, p)).toBeLessThan(1e-6);
    expect(mol.mixtureCdf(60, p)).toBeGreaterThan(1 - 1e-6);
  });

  it("density integrates to ~1 (trapezoid)", () => {
    const p: mol.MolParams = {
      logits: Float64Array.from([0.3, -0.2]),
      means: Float64Array.from([-0.3, 0.4]),
      logScales: Float64Array.from([-2, -1.5]),
    };
    let acc = 0;
    const h = 0.001;
    for (let x = -8; x <= 8; x += h) acc += mol.mixturePdf(x, p) * h;
    expect(Math.abs(acc - 1)).toBeLessThan(1e-3);
  });

  it("nll gradient matches finite differences", () => {
    const p: mol.MolParams = {
      logits: Float64Array.from([0.2, -0.4, 0.1]),
      means: Float64Array.from([-0.2, 0.1, 0.4]),
      logScales: Float64Array.from([-1.2, -2.0, -1.7]),
    };
    const x = 0.07;
    const g = mol.nllGradient(x, p);
    const eps = 1e-6;
    const nll = (q: mol.MolParams) => -mol.logLikelihood(x, q);
    for (let j = 0; j < 3; j++) {
      const pm = { ...p, means: p.means.slice() };
      pm.means[j] += eps;
      expect(g.dMeans[j]).toBeCloseTo((nll(pm) - nll(p)) / eps, 4);
      const pl = { ...p, logits: p.logits.slice() };
      pl.logits[j] += eps;
      expect(g.dLogits[j]).toBeCloseTo((nll(pl) - nll(p)) / eps, 4);
      const ps = { ...p, logScales: p.logScales.slice() };
      ps.logScales[j] += eps;
      expect(g.dLogScales[j]).toBeCloseTo((nll(ps) - nll(p)) / eps, 4);
    }
  });
});

describe("qmf", () => {
  it("haar cascade reconstructs exactly", () => {
    const x = Float64Array.from(new CounterRng(7).normals(1024));
    const snr = qmf.reconstructionSnrDb(x, 2, qmf.HAAR_PROTOTYPE);
    expect(snr).toBeGreaterThan(120);
  });

  it("default prototype reaches 55 dB on speech-like audio", () => {
    const x = harmonicSpeech(8000, 8, 150, 0.7);
    expect(qmf.reconstructionSnrDb(x, 2)).toBeGreaterThanOrEqual(55);
  });

  it("splits white noise roughly evenly", () => {
    const x = Float64Array.from(new CounterRng(9).normals(16384), (v) => 0.3 * v);
    const bands = qmf.analyze(x, 2);
    let total = 0;
    const energies = bands.map((b) => {
      let acc = 0;
      for (const v of b) acc += v * v;
      total += acc;
      return acc;
    });
    for (const e of energies) expect(Math.abs(e / total - 0.25)).toBeLessThan(0.025);
  });
});

describe("fft", () => {
  it("band shares match a direct DFT on a short signal", () => {
    const rng = new CounterRng(10);
    const x = Float64Array.from(rng.normals(256));
    const shares = bandEnergyShares(x, 4);
    // direct computation
    const bins = 129;
    const power = new Float64Array(bins);
    for (let k = 0; k < bins; k++) {
      let re = 0;
      let im = 0;
      for (let n = 0; n < 256; n++) {
        re += x[n] * Math.cos((2 * Math.PI * k * n) / 256);
        im -= x[n] * Math.sin((2 * Math.PI * k * n) / 256);
      }
      power[k] = re * re + im * im;
    }
    let total = 0;
    const direct = new Float64Array(4);
    for (let b = 0; b < 4; b++) {
      const lo = Math.floor((b * bins) / 4);
      const hi = Math.floor(((b + 1) * bins) / 4);
      for (let k = lo; k < hi; k++) direct[b] += power[k];
      total += direct[b];
    }
    for (let b = 0; b < 4; b++) expect(shares[b]).toBeCloseTo(direct[b] / total, 9);
  });
});

describe("linalg", () => {
  it("jacobi diagonalizes a symmetric matrix", () => {
    const rng = new CounterRng(11);
    const n = 10;
    const raw = new Mat(n, n, Float64Array.from(rng.normals(n * n)));
    const sym = raw.matmul(raw.transpose());
    const eig = symmetricEig(sym);
    // vectors orthonormal, values descending, A v = lambda v
    for (let i = 1; i < n; i++) expect(eig.values[i]).toBeLessThanOrEqual(eig.values[i - 1] + 1e-9);
    for (let i = 0; i < n; i++) {
      const v = eig.vectors.row(i);
      const av = sym.matvec(v);
      for (let j = 0; j < n; j++) expect(av[j]).toBeCloseTo(eig.values[i] * v[j], 7);
    }
  });

  it("gauss-jordan inverse works", () => {
    const rng = new CounterRng(12);
    const m = new Mat(6, 6, Float64Array.from(rng.normals(36)));
    for (let i = 0; i < 6; i++) m.data[i * 6 + i] += 3;
    const prod = m.matmul(inverse(m));
    for (let i = 0; i < 6; i++)
      for (let j = 0; j < 6; j++) expect(prod.get(i, j)).toBeCloseTo(i === j ? 1 : 0, 9);
  });
});

describe("kmeans", () => {
  it("recovers two separated blobs", () => {
    const rng = new CounterRng(13);
    const n = 200;
    const data = Mat.zeros(n, 2);
    for (let i = 0; i < n; i++) {
      const sign = i % 2 === 0 ? 1 : -1;
      const noise = rng.normals(2);
      data.set(i, 0, 3 * sign + 0.05 * noise[0]);
      data.set(i, 1, 3 * sign + 0.05 * noise[1]);
    }
    const centers = lloyd(data, 2, new CounterRng(0), 20);
    const sorted = [centers.row(0), centers.row(1)].sort((a, b) => a[0] - b[0]);
    expect(sorted[0][0]).toBeCloseTo(-3, 1);
    expect(sorted[1][0]).toBeCloseTo(3, 1);
  });
});

describe("si-snr", () => {
  it("caps identical signals", () => {
    const x = Float64Array.from(new CounterRng(14).normals(500));
    expect(siSnr(x, x)).toBe(SI_SNR_CAP_DB);
  });

  it("orthogonal equal-power noise sits at 0 dB", () => {
    const rng = new CounterRng(15);
    const ref = Float64Array.from(rng.normals(4000));
    const raw = Float64Array.from(rng.normals(4000));
    let rr = 0;
    let rx = 0;
    for (let i = 0; i < ref.length; i++) {
      rr += ref[i] ** 2;
      rx += raw[i] * ref[i];
    }
    const ortho = new Float64Array(ref.length);
    let oo = 0;
    for (let i = 0; i < ref.length; i++) {
      ortho[i] = raw[i] - (rx / rr) * ref[i];
      oo += ortho[i] ** 2;
    }
    const est = new Float64Array(ref.length);
    for (let i = 0; i < ref.length; i++) est[i] = ref[i] + ortho[i] * Math.sqrt(rr / oo);
    expect(Math.abs(siSnr(est, ref))).toBeLessThan(0.1);
    expect(siSnrImprovement(est, est, ref)).toBe(0);
  });
});

describe("identityish conditioning stack", () => {
  it("passes an impulse through (tanh-squashed, zeros stay zero)", () => {
    const ws = identityishWeightSet();
    const d = TOY_VOCODER;
    const vec = (n: string) => {
      const e = ws.tensors.get(n)!;
      if (e.kind !== "dense") throw new Error("dense expected");
      return Float64Array.from(e.data);
    };
    const stack = {
      convInW: vec("cond.conv_in.w"),
      convInB: vec("cond.conv_in.b"),
      dilW: [1, 2, 3].map((i) => vec(`cond.dil${i}.w`)),
      dilB: [1, 2, 3].map((i) => vec(`cond.dil${i}.b`)),
      upW: [1, 2, 3].map((i) => vec(`cond.up${i}.w`)),
      upB: [1, 2, 3].map((i) => vec(`cond.up${i}.b`)),
      projW: new Mat(d.gru, d.hidden, vec("cond.proj.w")),
      projB: vec("cond.proj.b"),
      hidden: d.hidden,
      nMels: d.nMels,
      dilations: [1, 2, 4],
      tile: 20,
    };
    const features = Mat.zeros(4, d.nMels);
    features.set(2, 0, 0.5); // impulse in mel 0 at frame 2
    const out = conditioning(features, stack);
    expect(out.rows).toBe(4 * 160);
    // channel 0 responds inside frame 2's steps, channel 1 stays silent
    let peak = 0;
    for (let t = 0; t < out.rows; t++) {
      peak = Math.max(peak, Math.abs(out.get(t, 0)));
      expect(out.get(t, 1)).toBe(0);
    }
    expect(peak).toBeGreaterThan(0.2);
    // nothing before frame 2's first step
    for (let t = 0; t < 2 * 160; t++) expect(out.get(t, 0)).toBe(0);
  });
});
