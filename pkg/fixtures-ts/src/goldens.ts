/**
 * Golden-vector emission.
 *
 * Each golden file is one NVW1 container holding many cases of a single
 * operation (tensors case####.in.* / case####.out.*) plus metadata:
 * golden.op, golden.cases, golden.tolerance. Inputs are rounded to float32
 * BEFORE the expected outputs are computed, so any consumer recomputing from
 * the stored tensors sees exactly the inputs the oracle saw.
 *
 * Every file is validated after serialization: it is parsed back and each
 * case's expectation is recomputed from the parsed tensors and compared
 * within the file's tolerance.
 */

import { CounterRng } from "./rng";
import { Mat } from "./oracles/linalg";
import * as conv from "./oracles/conv";
import { GruWeights, gruStep } from "./oracles/gru";
import * as mol from "./oracles/mol";
import { DEFAULT_MEL, logMel, melToHz, hzToMel } from "./oracles/mel";
import { bandEnergyShares } from "./oracles/fft";
import * as qmf from "./oracles/qmf";
import { lloyd } from "./oracles/kmeans";
import { symmetricEig } from "./oracles/linalg";
import { siSnr } from "./oracles/sisnr";
import { harmonicSpeech, tiltedNoise, toF32 } from "./audio";
import {
  BlockDiagTensor,
  BlockSparseTensor,
  Entry,
  WeightSet,
  dense,
  emptyWeightSet,
  readWeights,
  writeWeights,
} from "./nvw";

export interface GoldenFile {
  filename: string;
  ws: WeightSet;
  validate: (parsed: WeightSet) => void;
}

function f32(values: ArrayLike<number>): Float32Array {
  return Float32Array.from(values as number[], Math.fround);
}

function meta(ws: WeightSet, op: string, cases: number, tolerance: number): void {
  ws.metadata.set("golden.op", op);
  ws.metadata.set("golden.cases", String(cases));
  ws.metadata.set("golden.tolerance", String(tolerance));
}

function caseName(i: number, suffix: string): string {
  return `case${String(i).padStart(4, "0")}.${suffix}`;
}

function getDense(ws: WeightSet, name: string): Float32Array {
  const entry = ws.tensors.get(name);
  if (!entry || entry.kind !== "dense") throw new Error(`missing dense tensor ${name}`);
  return entry.data;
}

function getShape(ws: WeightSet, name: string): number[] {
  const entry = ws.tensors.get(name);
  if (!entry || entry.kind !== "dense") throw new Error(`missing dense tensor ${name}`);
  return entry.shape;
}

function assertClose(got: ArrayLike<number>, want: ArrayLike<number>, tol: number, what: string): void {
  if (got.length !== want.length) throw new Error(`${what}: length ${got.length} != ${want.length}`);
  for (let i = 0; i < got.length; i++) {
    if (Math.abs((got[i] as number) - (want[i] as number)) >= tol) {
      throw new Error(`${what}[${i}]: ${got[i]} vs ${want[i]} (tol ${tol})`);
    }
  }
}

// ---------------------------------------------------------------------------
// kernel ops

function convCaseDims(rng: CounterRng) {
  return {
    T: rng.integerBelow(12) + 4,
    cIn: rng.integerBelow(4) + 1,
    cOut: rng.integerBelow(4) + 1,
    width: rng.integerBelow(4) + 1,
    dilation: rng.integerBelow(4) + 1,
    lookahead: rng.integerBelow(3),
  };
}

export function conv1dGolden(seed: number, cases = 110): GoldenFile {
  const ws = emptyWeightSet();
  meta(ws, "conv1d", cases, 1e-5);
  const make = (i: number, rng: CounterRng) => {
    const d = convCaseDims(rng);
    const x = f32(rng.normals(d.T * d.cIn));
    const k = f32(rng.normals(d.cOut * d.cIn * d.width));
    const y = conv.conv1d(
      new Mat(d.T, d.cIn, Float64Array.from(x)),
      Float64Array.from(k),
      d.cOut,
      d.width,
      d.dilation,
      d.lookahead,
    );
    ws.tensors.set(caseName(i, "in.x"), dense([d.T, d.cIn], x));
    ws.tensors.set(caseName(i, "in.k"), dense([d.cOut, d.cIn, d.width], k));
    ws.tensors.set(caseName(i, "in.dilation"), dense([1], f32([d.dilation])));
    ws.tensors.set(caseName(i, "in.lookahead"), dense([1], f32([d.lookahead])));
    ws.tensors.set(caseName(i, "out.y"), dense([d.T, d.cOut], f32(y.data)));
  };
  for (let i = 0; i < cases; i++) make(i, new CounterRng(seed * 1000 + i));
  return {
    filename: "kernels_conv1d.nvw",
    ws,
    validate: (parsed) => {
      for (let i = 0; i < cases; i++) {
        const [T, cIn] = getShape(parsed, caseName(i, "in.x"));
        const [cOut, , width] = getShape(parsed, caseName(i, "in.k"));
        const y = conv.conv1d(
          new Mat(T, cIn, Float64Array.from(getDense(parsed, caseName(i, "in.x")))),
          Float64Array.from(getDense(parsed, caseName(i, "in.k"))),
          cOut,
          width,
          getDense(parsed, caseName(i, "in.dilation"))[0],
          getDense(parsed, caseName(i, "in.lookahead"))[0],
        );
        assertClose(y.data, getDense(parsed, caseName(i, "out.y")), 1e-5, `conv1d case ${i}`);
      }
    },
  };
}

export function transposeConvGolden(seed: number, cases = 110): GoldenFile {
  const ws = emptyWeightSet();
  meta(ws, "transpose_conv1d", cases, 1e-5);
  for (let i = 0; i < cases; i++) {
    const rng = new CounterRng(seed * 1000 + 31 + i);
    const T = rng.integerBelow(8) + 3;
    const cIn = rng.integerBelow(3) + 1;
    const cOut = rng.integerBelow(3) + 1;
    const width = rng.integerBelow(5) + 1;
    const stride = rng.integerBelow(3) + 1;
    const x = f32(rng.normals(T * cIn));
    const k = f32(rng.normals(cOut * cIn * width));
    const y = conv.transposeConv1d(
      new Mat(T, cIn, Float64Array.from(x)),
      Float64Array.from(k),
      cOut,
      width,
      stride,
    );
    ws.tensors.set(caseName(i, "in.x"), dense([T, cIn], x));
    ws.tensors.set(caseName(i, "in.k"), dense([cOut, cIn, width], k));
    ws.tensors.set(caseName(i, "in.stride"), dense([1], f32([stride])));
    ws.tensors.set(caseName(i, "out.y"), dense([stride * T, cOut], f32(y.data)));
  }
  return {
    filename: "kernels_transpose_conv1d.nvw",
    ws,
    validate: (parsed) => {
      for (let i = 0; i < cases; i++) {
        const [T, cIn] = getShape(parsed, caseName(i, "in.x"));
        const [cOut, , width] = getShape(parsed, caseName(i, "in.k"));
        const y = conv.transposeConv1d(
          new Mat(T, cIn, Float64Array.from(getDense(parsed, caseName(i, "in.x")))),
          Float64Array.from(getDense(parsed, caseName(i, "in.k"))),
          cOut,
          width,
          getDense(parsed, caseName(i, "in.stride"))[0],
        );
        assertClose(y.data, getDense(parsed, caseName(i, "out.y")), 1e-5, `transpose case ${i}`);
      }
    },
  };
}

export function depthwiseGolden(seed: number, cases = 110): GoldenFile {
  const ws = emptyWeightSet();
  meta(ws, "depthwise_conv1d", cases, 1e-5);
  for (let i = 0; i < cases; i++) {
    const rng = new CounterRng(seed * 1000 + 71 + i);
    const T = rng.integerBelow(12) + 3;
    const C = rng.integerBelow(5) + 1;
    const width = rng.integerBelow(4) + 1;
    const dilation = rng.integerBelow(4) + 1;
    const x = f32(rng.normals(T * C));
    const k = f32(rng.normals(C * width));
    const y = conv.depthwiseConv1d(
      new Mat(T, C, Float64Array.from(x)),
      new Mat(C, width, Float64Array.from(k)),
      dilation,
    );
    ws.tensors.set(caseName(i, "in.x"), dense([T, C], x));
    ws.tensors.set(caseName(i, "in.k"), dense([C, width], k));
    ws.tensors.set(caseName(i, "in.dilation"), dense([1], f32([dilation])));
    ws.tensors.set(caseName(i, "out.y"), dense([T, C], f32(y.data)));
  }
  return {
    filename: "kernels_depthwise_conv1d.nvw",
    ws,
    validate: (parsed) => {
      for (let i = 0; i < cases; i++) {
        const [T, C] = getShape(parsed, caseName(i, "in.x"));
        const [, width] = getShape(parsed, caseName(i, "in.k"));
        const y = conv.depthwiseConv1d(
          new Mat(T, C, Float64Array.from(getDense(parsed, caseName(i, "in.x")))),
          new Mat(C, width, Float64Array.from(getDense(parsed, caseName(i, "in.k")))),
          getDense(parsed, caseName(i, "in.dilation"))[0],
        );
        assertClose(y.data, getDense(parsed, caseName(i, "out.y")), 1e-5, `depthwise case ${i}`);
      }
    },
  };
}

export function gruGolden(seed: number, cases = 110): GoldenFile {
  const ws = emptyWeightSet();
  meta(ws, "gru_step", cases, 1e-5);
  const names = ["wr", "wz", "wn", "ur", "uz", "un"];
  for (let i = 0; i < cases; i++) {
    const rng = new CounterRng(seed * 1000 + 131 + i);
    const d = 4 * (rng.integerBelow(4) + 1);
    const mats: Float32Array[] = [];
    for (let m = 0; m < 6; m++) {
      const raw = rng.normals(d * d);
      mats.push(f32(raw.map((v) => 0.4 * v)));
    }
    const biases: Float32Array[] = [];
    for (let b = 0; b < 3; b++) biases.push(f32(rng.normals(d).map((v) => 0.4 * v)));
    const h = f32(rng.normals(d));
    const x = f32(rng.normals(d));
    const w: GruWeights = {
      wr: new Mat(d, d, Float64Array.from(mats[0])),
      wz: new Mat(d, d, Float64Array.from(mats[1])),
      wn: new Mat(d, d, Float64Array.from(mats[2])),
      ur: new Mat(d, d, Float64Array.from(mats[3])),
      uz: new Mat(d, d, Float64Array.from(mats[4])),
      un: new Mat(d, d, Float64Array.from(mats[5])),
      br: Float64Array.from(biases[0]),
      bz: Float64Array.from(biases[1]),
      bn: Float64Array.from(biases[2]),
    };
    const out = gruStep(Float64Array.from(h), Float64Array.from(x), w);
    names.forEach((name, m) => ws.tensors.set(caseName(i, `in.${name}`), dense([d, d], mats[m])));
    ["br", "bz", "bn"].forEach((name, b) => ws.tensors.set(caseName(i, `in.${name}`), dense([d], biases[b])));
    ws.tensors.set(caseName(i, "in.h"), dense([d], h));
    ws.tensors.set(caseName(i, "in.x"), dense([d], x));
    ws.tensors.set(caseName(i, "out.h"), dense([d], f32(out)));
  }
  return {
    filename: "kernels_gru_step.nvw",
    ws,
    validate: (parsed) => {
      for (let i = 0; i < cases; i++) {
        const [d] = getShape(parsed, caseName(i, "in.h"));
        const m = (n: string) => new Mat(d, d, Float64Array.from(getDense(parsed, caseName(i, `in.${n}`))));
        const v = (n: string) => Float64Array.from(getDense(parsed, caseName(i, `in.${n}`)));
        const out = gruStep(v("h"), v("x"), {
          wr: m("wr"), wz: m("wz"), wn: m("wn"), ur: m("ur"), uz: m("uz"), un: m("un"),
          br: v("br"), bz: v("bz"), bn: v("bn"),
        });
        assertClose(out, getDense(parsed, caseName(i, "out.h")), 1e-5, `gru case ${i}`);
      }
    },
  };
}

function densifyEntry(entry: Entry): Mat {
  if (entry.kind === "dense") {
    return new Mat(entry.shape[0], entry.shape[1], Float64Array.from(entry.data));
  }
  if (entry.kind === "sparse") {
    const out = Mat.zeros(entry.rows, entry.cols);
    const gridCols = entry.cols / 4;
    for (let b = 0; b < entry.ids.length; b++) {
      const br = Math.floor(entry.ids[b] / gridCols);
      const bc = entry.ids[b] % gridCols;
      for (let r = 0; r < 4; r++)
        for (let c = 0; c < 4; c++) out.set(br * 4 + r, bc * 4 + c, entry.blocks[b * 16 + r * 4 + c]);
    }
    return out;
  }
  const b = entry.dim / entry.nBlocks;
  const out = Mat.zeros(entry.dim, entry.dim);
  for (let n = 0; n < entry.nBlocks; n++)
    for (let r = 0; r < b; r++)
      for (let c = 0; c < b; c++) out.set(n * b + r, n * b + c, entry.blocks[(n * b + r) * b + c]);
  return out;
}

export function matvecGolden(seed: number, cases = 110): GoldenFile {
  const ws = emptyWeightSet();
  meta(ws, "matvec", cases, 1e-6);
  for (let i = 0; i < cases; i++) {
    const rng = new CounterRng(seed * 1000 + 211 + i);
    let entry: Entry;
    let cols: number;
    if (i % 2 === 0) {
      const rows = 4 * (rng.integerBelow(10) + 1);
      cols = 4 * (rng.integerBelow(10) + 1);
      const grid = (rows / 4) * (cols / 4);
      const nKeep = Math.max(1, Math.floor(0.3 * grid));
      const idSet = new Set<number>();
      while (idSet.size < nKeep) idSet.add(rng.integerBelow(grid));
      const ids = Uint32Array.from([...idSet].sort((a, b) => a - b));
      entry = { kind: "sparse", rows, cols, ids, blocks: f32(rng.normals(ids.length * 16)) };
    } else {
      const nBlocks = rng.integerBelow(4) + 1;
      const b = rng.integerBelow(5) + 1;
      cols = nBlocks * b;
      entry = { kind: "diag", dim: cols, nBlocks, blocks: f32(rng.normals(nBlocks * b * b)) };
    }
    const x = f32(rng.normals(cols));
    const y = densifyEntry(entry).matvec(Float64Array.from(x));
    ws.tensors.set(caseName(i, "in.m"), entry);
    ws.tensors.set(caseName(i, "in.x"), dense([cols], x));
    ws.tensors.set(caseName(i, "out.y"), dense([y.length], f32(y)));
  }
  return {
    filename: "kernels_matvec.nvw",
    ws,
    validate: (parsed) => {
      for (let i = 0; i < cases; i++) {
        const entry = parsed.tensors.get(caseName(i, "in.m"))!;
        const x = Float64Array.from(getDense(parsed, caseName(i, "in.x")));
        const y = densifyEntry(entry).matvec(x);
        const want = getDense(parsed, caseName(i, "out.y"));
        let scale = 1;
        for (const v of want) scale = Math.max(scale, Math.abs(v));
        for (let j = 0; j < y.length; j++) {
          if (Math.abs(y[j] - want[j]) / scale >= 1e-6) throw new Error(`matvec case ${i}[${j}]`);
        }
      }
    },
  };
}

export function pruneGolden(seed: number, cases = 12): GoldenFile {
  const ws = emptyWeightSet();
  meta(ws, "magnitude_prune", cases, 0);
  const keepIds = (m: Mat, target: number): Uint32Array => {
    const gridR = m.rows / 4;
    const gridC = m.cols / 4;
    const norms: Array<[number, number]> = [];
    for (let r = 0; r < gridR; r++)
      for (let c = 0; c < gridC; c++) {
        let acc = 0;
        for (let i = 0; i < 4; i++)
          for (let j = 0; j < 4; j++) acc += m.get(r * 4 + i, c * 4 + j) ** 2;
        norms.push([Math.sqrt(acc), r * gridC + c]);
      }
    const keep = Math.ceil((1 - target) * norms.length);
    norms.sort((a, b) => (b[0] !== a[0] ? b[0] - a[0] : a[1] - b[1]));
    return Uint32Array.from(norms.slice(0, keep).map(([, id]) => id).sort((a, b) => a - b));
  };
  const targets = [0, 0.25, 0.5, 0.75, 0.92];
  for (let i = 0; i < cases; i++) {
    const rng = new CounterRng(seed * 1000 + 311 + i);
    const rows = 4 * (rng.integerBelow(8) + 2);
    const colsV = 4 * (rng.integerBelow(8) + 2);
    const m = f32(rng.normals(rows * colsV));
    const target = targets[i % targets.length];
    const ids = keepIds(new Mat(rows, colsV, Float64Array.from(m)), target);
    ws.tensors.set(caseName(i, "in.m"), dense([rows, colsV], m));
    ws.tensors.set(caseName(i, "in.target"), dense([1], f32([target])));
    ws.tensors.set(caseName(i, "out.ids"), dense([ids.length], f32(Array.from(ids))));
  }
  return {
    filename: "kernels_magnitude_prune.nvw",
    ws,
    validate: (parsed) => {
      for (let i = 0; i < cases; i++) {
        const [rows, colsV] = getShape(parsed, caseName(i, "in.m"));
        const m = new Mat(rows, colsV, Float64Array.from(getDense(parsed, caseName(i, "in.m"))));
        const ids = keepIds(m, getDense(parsed, caseName(i, "in.target"))[0]);
        const want = getDense(parsed, caseName(i, "out.ids"));
        if (ids.length !== want.length) throw new Error(`prune case ${i}: count`);
        for (let j = 0; j < ids.length; j++) {
          if (ids[j] !== want[j]) throw new Error(`prune case ${i}: id ${j}`);
        }
      }
    },
  };
}

// ---------------------------------------------------------------------------
// mixture of logistics

function randomMolParams(rng: CounterRng, k: number): mol.MolParams {
  const logits = Float64Array.from(rng.normals(k));
  const means = Float64Array.from(rng.normals(k), (v) => 0.5 * v);
  const logScales = Float64Array.from(rng.normals(k), (v) => v - 1.5);
  return { logits, means, logScales };
}

function paramsToTensor(p: mol.MolParams): Float32Array {
  return f32([...p.logits, ...p.means, ...p.logScales]);
}

function tensorToParams(data: Float32Array, k: number): mol.MolParams {
  return {
    logits: Float64Array.from(data.subarray(0, k)),
    means: Float64Array.from(data.subarray(k, 2 * k)),
    logScales: Float64Array.from(data.subarray(2 * k, 3 * k)),
  };
}

export function molLogLikelihoodGolden(seed: number, cases = 12): GoldenFile {
  const ws = emptyWeightSet();
  meta(ws, "mol_log_likelihood", cases, 1e-5);
  for (let i = 0; i < cases; i++) {
    const rng = new CounterRng(seed * 1000 + 411 + i);
    const k = rng.integerBelow(7) + 1;
    const p0 = randomMolParams(rng, k);
    const pTensor = paramsToTensor(p0);
    const p = tensorToParams(pTensor, k);
    const xs = f32(rng.normals(17).map((v) => 0.6 * v));
    const ll = Float64Array.from(xs, (x) => mol.logLikelihood(x, p));
    ws.tensors.set(caseName(i, "in.params"), dense([3, k], pTensor));
    ws.tensors.set(caseName(i, "in.x"), dense([xs.length], xs));
    ws.tensors.set(caseName(i, "out.ll"), dense([ll.length], f32(ll)));
  }
  return {
    filename: "mol_log_likelihood.nvw",
    ws,
    validate: (parsed) => {
      for (let i = 0; i < cases; i++) {
        const [, k] = getShape(parsed, caseName(i, "in.params"));
        const p = tensorToParams(getDense(parsed, caseName(i, "in.params")), k);
        const xs = getDense(parsed, caseName(i, "in.x"));
        const want = getDense(parsed, caseName(i, "out.ll"));
        for (let j = 0; j < xs.length; j++) {
          if (Math.abs(mol.logLikelihood(xs[j], p) - want[j]) >= 1e-5) {
            throw new Error(`mol ll case ${i}[${j}]`);
          }
        }
      }
    },
  };
}

/** Inverse-CDF sampler matching the engine's contract (for self-validation). */
function molSample(p: mol.MolParams, u1: number, u2: number): number {
  const w = mol.softmax(p.logits);
  let cum = 0;
  let j = w.length - 1;
  for (let i = 0; i < w.length; i++) {
    cum += w[i];
    if (u1 < cum) {
      j = i;
      break;
    }
  }
  const scale = Math.exp(Math.max(p.logScales[j], Math.log(mol.SCALE_FLOOR)));
  const s = p.means[j] + scale * (Math.log(u2) - Math.log1p(-u2));
  return Math.max(-1, Math.min(1, s));
}

export function molCdfGolden(seed: number, cases = 10): GoldenFile {
  const ws = emptyWeightSet();
  meta(ws, "mol_cdf", cases, 0.01);
  const gridN = 1024;
  for (let i = 0; i < cases; i++) {
    const rng = new CounterRng(seed * 1000 + 511 + i);
    const k = rng.integerBelow(7) + 1;
    const pT = paramsToTensor(randomMolParams(rng, k));
    const p = tensorToParams(pT, k);
    const grid = new Float64Array(gridN);
    for (let g = 0; g < gridN; g++) grid[g] = -1.05 + (2.1 * g) / (gridN - 1);
    const gridF = f32(grid);
    const cdf = Float64Array.from(gridF, (x) => mol.mixtureCdf(x, p));
    ws.tensors.set(caseName(i, "in.params"), dense([3, k], pT));
    ws.tensors.set(caseName(i, "in.grid"), dense([gridN], gridF));
    ws.tensors.set(caseName(i, "in.seed"), dense([1], f32([i])));
    ws.tensors.set(caseName(i, "out.cdf"), dense([gridN], f32(cdf)));
  }
  return {
    filename: "mol_cdf.nvw",
    ws,
    validate: (parsed) => {
      for (let i = 0; i < cases; i++) {
        const [, k] = getShape(parsed, caseName(i, "in.params"));
        const p = tensorToParams(getDense(parsed, caseName(i, "in.params")), k);
        const grid = getDense(parsed, caseName(i, "in.grid"));
        const cdf = getDense(parsed, caseName(i, "out.cdf"));
        for (let g = 1; g < grid.length; g++) {
          if (cdf[g] < cdf[g - 1] - 1e-7) throw new Error(`mol cdf case ${i}: not monotone`);
        }
        // sample with the engine RNG contract and KS-check the table
        const rng = new CounterRng(getDense(parsed, caseName(i, "in.seed"))[0]);
        const n = 20000;
        const draws: number[] = [];
        for (let s = 0; s < n; s++) {
          const u1 = rng.uniform();
          const u2 = rng.uniform();
          draws.push(molSample(p, u1, u2));
        }
        draws.sort((a, b) => a - b);
        let ks = 0;
        for (let g = 0; g < grid.length; g++) {
          if (grid[g] <= -0.999 || grid[g] >= 0.999) continue;
          let lo = 0;
          let hi = draws.length;
          while (lo < hi) {
            const mid = (lo + hi) >> 1;
            if (draws[mid] <= grid[g]) lo = mid + 1;
            else hi = mid;
          }
          ks = Math.max(ks, Math.abs(lo / n - cdf[g]));
        }
        if (ks >= 0.02) throw new Error(`mol cdf case ${i}: KS ${ks}`);
      }
    },
  };
}

// ---------------------------------------------------------------------------
// features / quantizer / filterbank / metric

export function logmelGolden(seed: number): GoldenFile {
  const ws = emptyWeightSet();
  const cases = 2;
  meta(ws, "logmel", cases, 1e-4);
  const signals = [
    harmonicSpeech(1920, seed + 61, 150, 0.6),
    Float64Array.from({ length: 1920 }, (_, i) => 0.5 * Math.sin((2 * Math.PI * 1000 * i) / 16000)),
  ];
  signals.forEach((sig, i) => {
    const sigF = toF32(sig);
    const feats = logMel(Float64Array.from(sigF));
    ws.tensors.set(caseName(i, "in.audio"), dense([sigF.length], sigF));
    ws.tensors.set(caseName(i, "out.feats"), dense([feats.rows, feats.cols], f32(feats.data)));
  });
  return {
    filename: "features_logmel.nvw",
    ws,
    validate: (parsed) => {
      for (let i = 0; i < cases; i++) {
        const audio = Float64Array.from(getDense(parsed, caseName(i, "in.audio")));
        const feats = logMel(audio);
        assertClose(feats.data, getDense(parsed, caseName(i, "out.feats")), 1e-4, `logmel case ${i}`);
      }
      // the 1 kHz sine's strongest mel bin is the one whose center is nearest 1 kHz
      const feats = logMel(Float64Array.from(getDense(parsed, caseName(1, "in.audio"))));
      const centers: number[] = [];
      const lo = hzToMel(DEFAULT_MEL.fminHz);
      const hi = hzToMel(DEFAULT_MEL.fmaxHz);
      for (let m = 1; m <= DEFAULT_MEL.nMels; m++) {
        centers.push(melToHz(lo + ((hi - lo) * m) / (DEFAULT_MEL.nMels + 1)));
      }
      let want = 0;
      for (let m = 1; m < centers.length; m++) {
        if (Math.abs(centers[m] - 1000) < Math.abs(centers[want] - 1000)) want = m;
      }
      const row = feats.row(1);
      let got = 0;
      for (let m = 1; m < row.length; m++) if (row[m] > row[got]) got = m;
      if (got !== want) throw new Error(`sine argmax ${got} != ${want}`);
    },
  };
}

export function kltGolden(seed: number): GoldenFile {
  const ws = emptyWeightSet();
  const cases = 2;
  meta(ws, "klt", cases, 1e-3);
  const d = 24;
  const n = 200;
  const fitKlt = (frames: Mat): { mean: Float64Array; basis: Mat } => {
    const mean = new Float64Array(d);
    for (let i = 0; i < n; i++) for (let j = 0; j < d; j++) mean[j] += frames.get(i, j) / n;
    const cov = Mat.zeros(d, d);
    for (let i = 0; i < n; i++) {
      for (let a = 0; a < d; a++) {
        const va = frames.get(i, a) - mean[a];
        for (let b = 0; b < d; b++) cov.data[a * d + b] += (va * (frames.get(i, b) - mean[b])) / n;
      }
    }
    let trace = 0;
    for (let a = 0; a < d; a++) trace += cov.get(a, a);
    for (let a = 0; a < d; a++) cov.data[a * d + a] += (1e-6 * trace) / d;
    const eig = symmetricEig(cov);
    const basis = eig.vectors;
    for (let r = 0; r < d; r++) {
      const row = basis.row(r);
      let arg = 0;
      for (let j = 1; j < d; j++) if (Math.abs(row[j]) > Math.abs(row[arg])) arg = j;
      if (row[arg] < 0) for (let j = 0; j < d; j++) row[j] = -row[j];
    }
    return { mean, basis };
  };
  for (let i = 0; i < cases; i++) {
    const rng = new CounterRng(seed * 1000 + 611 + i);
    const raw = rng.normals(n * d);
    const frames = new Float32Array(n * d);
    for (let r = 0; r < n; r++)
      for (let c = 0; c < d; c++) {
        const scale = 3.0 - (2.7 * c) / (d - 1);
        frames[r * d + c] = Math.fround(raw[r * d + c] * scale + 0.5 * c);
      }
    const mat = new Mat(n, d, Float64Array.from(frames));
    const { mean, basis } = fitKlt(mat);
    ws.tensors.set(caseName(i, "in.frames"), dense([n, d], frames));
    ws.tensors.set(caseName(i, "out.mean"), dense([d], f32(mean)));
    ws.tensors.set(caseName(i, "out.basis"), dense([d, d], f32(basis.data)));
  }
  return {
    filename: "quantizer_klt.nvw",
    ws,
    validate: (parsed) => {
      for (let i = 0; i < cases; i++) {
        const frames = new Mat(n, d, Float64Array.from(getDense(parsed, caseName(i, "in.frames"))));
        const { mean, basis } = fitKlt(frames);
        assertClose(mean, getDense(parsed, caseName(i, "out.mean")), 1e-3, `klt mean ${i}`);
        assertClose(basis.data, getDense(parsed, caseName(i, "out.basis")), 1e-3, `klt basis ${i}`);
        // orthonormality
        const gram = basis.matmul(basis.transpose());
        for (let a = 0; a < d; a++)
          for (let b = 0; b < d; b++) {
            const want = a === b ? 1 : 0;
            if (Math.abs(gram.get(a, b) - want) > 1e-6) throw new Error(`klt gram ${i}`);
          }
      }
    },
  };
}

export function kmeansGolden(seed: number): GoldenFile {
  const ws = emptyWeightSet();
  const cases = 2;
  meta(ws, "kmeans", cases, 1e-3);
  const iterations = 20;
  for (let i = 0; i < cases; i++) {
    const rng = new CounterRng(seed * 1000 + 711 + i);
    const bits = i + 1; // 2 then 4 clusters
    const kClusters = 2 ** bits;
    const dDim = 3;
    const perCluster = 120;
    const data = new Float32Array(kClusters * perCluster * dDim);
    for (let c = 0; c < kClusters; c++) {
      const center = [4 * (c % 2 === 0 ? 1 : -1) * (1 + Math.floor(c / 2)), 3 * (c < 2 ? 1 : -1), c];
      for (let p = 0; p < perCluster; p++) {
        const noise = rng.normals(dDim);
        for (let j = 0; j < dDim; j++) {
          data[((c * perCluster + p) * dDim) + j] = Math.fround(center[j] + 0.05 * noise[j]);
        }
      }
    }
    const kmSeed = seed + i;
    const centers = lloyd(
      new Mat(kClusters * perCluster, dDim, Float64Array.from(data)),
      kClusters,
      new CounterRng(kmSeed),
      iterations,
    );
    ws.tensors.set(caseName(i, "in.data"), dense([kClusters * perCluster, dDim], data));
    ws.tensors.set(caseName(i, "in.bits"), dense([1], f32([bits])));
    ws.tensors.set(caseName(i, "in.seed"), dense([1], f32([kmSeed])));
    ws.tensors.set(caseName(i, "in.iterations"), dense([1], f32([iterations])));
    ws.tensors.set(caseName(i, "out.codebook"), dense([kClusters, dDim], f32(centers.data)));
  }
  return {
    filename: "quantizer_kmeans.nvw",
    ws,
    validate: (parsed) => {
      for (let i = 0; i < cases; i++) {
        const [nRows, dDim] = getShape(parsed, caseName(i, "in.data"));
        const data = new Mat(nRows, dDim, Float64Array.from(getDense(parsed, caseName(i, "in.data"))));
        const bits = getDense(parsed, caseName(i, "in.bits"))[0];
        const centers = lloyd(
          data,
          2 ** bits,
          new CounterRng(getDense(parsed, caseName(i, "in.seed"))[0]),
          getDense(parsed, caseName(i, "in.iterations"))[0],
        );
        assertClose(centers.data, getDense(parsed, caseName(i, "out.codebook")), 1e-3, `kmeans ${i}`);
      }
    },
  };
}

export function siSnrGolden(seed: number): GoldenFile {
  const ws = emptyWeightSet();
  const cases = 6;
  meta(ws, "si_snr", cases, 1e-6);
  for (let i = 0; i < cases; i++) {
    const rng = new CounterRng(seed * 1000 + 811 + i);
    const n = 2000;
    const ref = f32(rng.normals(n).map((v) => 0.3 * v));
    let est: Float32Array;
    if (i === 0) {
      est = ref.slice();
    } else if (i === 1) {
      est = f32(Array.from(ref, (v) => 2.5 * v));
    } else {
      const noiseAmp = [0.02, 0.1, 0.3, 1.0][i - 2];
      est = f32(Array.from(ref, (v, j2) => v + noiseAmp * rng.uniform() * (j2 % 2 ? 1 : -1)));
    }
    const value = siSnr(Float64Array.from(est), Float64Array.from(ref));
    ws.tensors.set(caseName(i, "in.estimate"), dense([n], est));
    ws.tensors.set(caseName(i, "in.reference"), dense([n], ref));
    ws.tensors.set(caseName(i, "out.value"), dense([1], f32([value])));
  }
  return {
    filename: "metric_si_snr.nvw",
    ws,
    validate: (parsed) => {
      for (let i = 0; i < cases; i++) {
        const est = Float64Array.from(getDense(parsed, caseName(i, "in.estimate")));
        const ref = Float64Array.from(getDense(parsed, caseName(i, "in.reference")));
        const got = siSnr(est, ref);
        const want = getDense(parsed, caseName(i, "out.value"))[0];
        if (Math.abs(got - want) >= 1e-6) throw new Error(`si_snr case ${i}: ${got} vs ${want}`);
      }
    },
  };
}

export function qmfBandsGolden(seed: number): GoldenFile {
  const ws = emptyWeightSet();
  meta(ws, "qmf_bands", 1, 0.03);
  const noise = toF32(tiltedNoise(16384, seed + 91, 0.0, 0.4)); // flat white noise
  const shares = bandEnergyShares(Float64Array.from(noise), 4);
  ws.tensors.set(caseName(0, "in.audio"), dense([noise.length], noise));
  ws.tensors.set(caseName(0, "out.shares"), dense([4], f32(shares)));
  return {
    filename: "filterbank_band_energies.nvw",
    ws,
    validate: (parsed) => {
      const audio = Float64Array.from(getDense(parsed, caseName(0, "in.audio")));
      const shares2 = bandEnergyShares(audio, 4);
      assertClose(shares2, getDense(parsed, caseName(0, "out.shares")), 1e-6, "qmf shares");
      // the fixtures' own QMF agrees with the spectral split
      const bands = qmf.analyze(audio, 2);
      let total = 0;
      const energies = bands.map((b) => {
        let acc = 0;
        for (const v of b) acc += v * v;
        total += acc;
        return acc;
      });
      energies.forEach((e, i) => {
        if (Math.abs(e / total - shares2[i]) > 0.03) throw new Error(`band ${i} share mismatch`);
      });
    },
  };
}

export function qmfReconGolden(seed: number): GoldenFile {
  const ws = emptyWeightSet();
  const cases = 2;
  meta(ws, "qmf_recon", cases, 0);
  const signals = [harmonicSpeech(8000, seed + 95, 155, 0.7), tiltedNoise(8192, seed + 96, 0.3, 0.4)];
  signals.forEach((sig, i) => {
    const sigF = toF32(sig);
    ws.tensors.set(caseName(i, "in.audio"), dense([sigF.length], sigF));
    ws.tensors.set(caseName(i, "in.min_snr_db"), dense([1], f32([55])));
  });
  return {
    filename: "filterbank_reconstruction.nvw",
    ws,
    validate: (parsed) => {
      for (let i = 0; i < cases; i++) {
        const audio = Float64Array.from(getDense(parsed, caseName(i, "in.audio")));
        const snr = qmf.reconstructionSnrDb(audio, 2);
        const min = getDense(parsed, caseName(i, "in.min_snr_db"))[0];
        if (snr < min) throw new Error(`qmf recon case ${i}: ${snr} dB < ${min}`);
      }
    },
  };
}

export function allGoldens(seed: number): GoldenFile[] {
  return [
    conv1dGolden(seed),
    transposeConvGolden(seed),
    depthwiseGolden(seed),
    gruGolden(seed),
    matvecGolden(seed),
    pruneGolden(seed),
    molLogLikelihoodGolden(seed),
    molCdfGolden(seed),
    logmelGolden(seed),
    kltGolden(seed),
    kmeansGolden(seed),
    siSnrGolden(seed),
    qmfBandsGolden(seed),
    qmfReconGolden(seed),
  ];
}

export function validateGoldenBuffer(file: GoldenFile, buf: Buffer): void {
  file.validate(readWeights(buf));
}

export function emitGolden(file: GoldenFile): Buffer {
  const buf = writeWeights(file.ws);
  validateGoldenBuffer(file, buf);
  return buf;
}
