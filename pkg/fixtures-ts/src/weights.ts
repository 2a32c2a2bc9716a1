/**
 * Weight-set builders: random (structure-valid toy-dimension engine set),
 * identityish (conditioning stack that passes an impulse through), and the
 * toy-trained models from train.ts. All emission is deterministic in the
 * seed, byte for byte.
 */

import { CounterRng } from "./rng";
import { Mat } from "./oracles/linalg";
import { DEFAULT_PROTOTYPE } from "./oracles/qmf";
import { WeightSet, dense, emptyWeightSet } from "./nvw";

export interface ToyVocoderDims {
  nMels: number;
  hidden: number;
  gru: number;
  bands: number;
  nMix: number;
}

export const TOY_VOCODER: ToyVocoderDims = { nMels: 160, hidden: 8, gru: 16, bands: 4, nMix: 4 };

export interface ToyTasDims {
  filters: number;
  window: number;
  stride: number;
  maskFilters: number;
  repeats: number;
  blocksPerRepeat: number;
  channels: number;
  hidden: number;
  dwKernel: number;
  maskOutKernel: number;
  lookahead: number;
}

export const TOY_TASNET: ToyTasDims = {
  filters: 32,
  window: 16,
  stride: 4,
  maskFilters: 16,
  repeats: 1,
  blocksPerRepeat: 4,
  channels: 24,
  hidden: 16,
  dwKernel: 3,
  maskOutKernel: 3,
  lookahead: 2,
};

export function gauss(rng: CounterRng, n: number, scale: number): Float32Array {
  const raw = rng.normals(n);
  const out = new Float32Array(n);
  for (let i = 0; i < n; i++) out[i] = Math.fround(raw[i] * scale);
  return out;
}

function zeros(n: number): Float32Array {
  return new Float32Array(n);
}

function setVocoderMeta(ws: WeightSet, d: ToyVocoderDims): void {
  ws.metadata.set("vocoder.cond_hidden", String(d.hidden));
  ws.metadata.set("vocoder.gru_dim", String(d.gru));
  ws.metadata.set("vocoder.n_mix", String(d.nMix));
  ws.metadata.set("qmf.levels", String(Math.log2(d.bands)));
  ws.metadata.set("mol.scale_floor", "0.0001");
}

function setTasnetMeta(ws: WeightSet, d: ToyTasDims): void {
  ws.metadata.set("tasnet.n_filters", String(d.filters));
  ws.metadata.set("tasnet.window", String(d.window));
  ws.metadata.set("tasnet.stride", String(d.stride));
  ws.metadata.set("tasnet.mask_filters", String(d.maskFilters));
  ws.metadata.set("tasnet.n_repeats", String(d.repeats));
  ws.metadata.set("tasnet.blocks_per_repeat", String(d.blocksPerRepeat));
  ws.metadata.set("tasnet.block_channels", String(d.channels));
  ws.metadata.set("tasnet.hidden", String(d.hidden));
  ws.metadata.set("tasnet.lookahead_frames", String(d.lookahead));
}

function addQmf(ws: WeightSet): void {
  ws.tensors.set("qmf.prototype", dense([DEFAULT_PROTOTYPE.length], Float32Array.from(DEFAULT_PROTOTYPE)));
}

/** Gram-Schmidt orthonormal basis from seeded gaussians. */
function randomOrthonormal(rng: CounterRng, n: number): Mat {
  const m = new Mat(n, n, Float64Array.from(rng.normals(n * n)));
  for (let i = 0; i < n; i++) {
    const row = m.row(i);
    for (let j = 0; j < i; j++) {
      const prev = m.row(j);
      let proj = 0;
      for (let k = 0; k < n; k++) proj += row[k] * prev[k];
      for (let k = 0; k < n; k++) row[k] -= proj * prev[k];
    }
    let norm = 0;
    for (let k = 0; k < n; k++) norm += row[k] ** 2;
    norm = Math.sqrt(norm);
    for (let k = 0; k < n; k++) row[k] /= norm;
  }
  return m;
}

const VQ_LAYOUT = [11, 11, 11, 11, 11, 11, 11, 11, 11, 11, 10, 10, 10, 10, 10];

function addQuantizer(ws: WeightSet, rng: CounterRng): void {
  const basis = randomOrthonormal(rng, 160);
  ws.tensors.set("klt.mean", dense([160], gauss(rng, 160, 1.0)));
  ws.tensors.set("klt.basis", dense([160, 160], Float32Array.from(basis.data, Math.fround)));
  VQ_LAYOUT.forEach((dim, i) => {
    ws.tensors.set(`vq.cb${String(i).padStart(2, "0")}`, dense([256, dim], gauss(rng, 256 * dim, 0.5)));
  });
  ws.metadata.set("vq.layout", VQ_LAYOUT.join(","));
  ws.metadata.set("vq.bits", VQ_LAYOUT.map(() => 8).join(","));
}

export function addVocoderTensors(
  ws: WeightSet,
  d: ToyVocoderDims,
  fill: (name: string, shape: number[]) => Float32Array,
): void {
  const put = (name: string, shape: number[]) => ws.tensors.set(name, dense(shape, fill(name, shape)));
  put("cond.conv_in.w", [d.hidden, d.nMels, 3]);
  put("cond.conv_in.b", [d.hidden]);
  for (let i = 1; i <= 3; i++) {
    put(`cond.dil${i}.w`, [d.hidden, d.hidden, 2]);
    put(`cond.dil${i}.b`, [d.hidden]);
    put(`cond.up${i}.w`, [d.hidden, d.hidden, 4]);
    put(`cond.up${i}.b`, [d.hidden]);
  }
  put("cond.proj.w", [d.gru, d.hidden]);
  put("cond.proj.b", [d.gru]);
  for (const gate of ["r", "z", "n"]) {
    put(`gru.w${gate}`, [d.gru, d.gru]);
    put(`gru.u${gate}`, [d.gru, d.gru]);
    put(`gru.b${gate}`, [d.gru]);
  }
  put("ar_proj.w", [d.gru, d.bands]);
  put("ar_proj.b", [d.gru]);
  put("mol_proj.w", [d.bands * 3 * d.nMix, d.gru]);
  put("mol_proj.b", [d.bands * 3 * d.nMix]);
}

export function addTasnetTensors(
  ws: WeightSet,
  d: ToyTasDims,
  fill: (name: string, shape: number[]) => Float32Array,
): void {
  const put = (name: string, shape: number[]) => ws.tensors.set(name, dense(shape, fill(name, shape)));
  put("tasnet.fb_in.w", [d.filters, d.window]);
  put("tasnet.fb_mask.w", [d.maskFilters, d.window]);
  put("tasnet.fb_out.w", [d.filters, d.window]);
  for (let k = 0; k < d.repeats * d.blocksPerRepeat; k++) {
    const p = `tasnet.block${String(k).padStart(2, "0")}`;
    put(`${p}.in.w`, [d.channels, d.hidden]);
    put(`${p}.in.b`, [d.channels]);
    put(`${p}.in_prelu.a`, [d.channels]);
    put(`${p}.dw.w`, [d.channels, d.dwKernel]);
    put(`${p}.dw.b`, [d.channels]);
    put(`${p}.dw_prelu.a`, [d.channels]);
    put(`${p}.out.w`, [d.hidden, d.channels]);
    put(`${p}.out.b`, [d.hidden]);
  }
  put("tasnet.mask_out.w", [d.filters, d.maskFilters, d.maskOutKernel]);
  put("tasnet.mask_out.b", [d.filters]);
}

/** Structure-valid random weight set at toy dimensions (vocoder + quantizer +
 * QMF + denoiser). */
export function randomWeightSet(seed: number): WeightSet {
  const ws = emptyWeightSet();
  const rng = new CounterRng(seed);
  addQmf(ws);
  addQuantizer(ws, rng);
  addVocoderTensors(ws, TOY_VOCODER, (name, shape) => {
    const n = shape.reduce((a, b) => a * b, 1);
    if (name.endsWith(".b")) return zeros(n);
    const fanIn = shape.length > 1 ? n / shape[0] : n;
    return gauss(rng, n, 0.5 / Math.sqrt(fanIn));
  });
  addTasnetTensors(ws, TOY_TASNET, (name, shape) => {
    const n = shape.reduce((a, b) => a * b, 1);
    if (name.endsWith("_prelu.a")) return new Float32Array(n).fill(0.25);
    if (name.endsWith(".b")) return zeros(n);
    const fanIn = shape.length > 1 ? n / shape[0] : n;
    return gauss(rng, n, 0.3 / Math.sqrt(fanIn));
  });
  setVocoderMeta(ws, TOY_VOCODER);
  setTasnetMeta(ws, TOY_TASNET);
  ws.metadata.set("mel.n_mels", "160");
  ws.metadata.set("mel.window_ms", "80");
  ws.metadata.set("mel.hop_ms", "40");
  ws.metadata.set("audio.sample_rate_hz", "16000");
  return ws;
}

/** Conditioning stack whose layers are identity-shaped (zeros elsewhere), so
 * a unit impulse in mel 0 reaches the output untouched except for the tanh
 * squashing. */
export function identityishWeightSet(): WeightSet {
  const ws = emptyWeightSet();
  const d = TOY_VOCODER;
  addQmf(ws);
  addVocoderTensors(ws, d, (name, shape) => {
    const n = shape.reduce((a, b) => a * b, 1);
    const out = zeros(n);
    if (name === "cond.conv_in.w") {
      // tap j=1 is the current frame under one-frame lookahead
      for (let c = 0; c < d.hidden; c++) out[(c * d.nMels + c) * 3 + 1] = 1;
    } else if (/cond\.dil\d\.w/.test(name)) {
      for (let c = 0; c < d.hidden; c++) out[(c * d.hidden + c) * 2 + 0] = 1;
    } else if (/cond\.up\d\.w/.test(name)) {
      for (let c = 0; c < d.hidden; c++) {
        out[(c * d.hidden + c) * 4 + 0] = 1;
        out[(c * d.hidden + c) * 4 + 1] = 1;
      }
    } else if (name === "cond.proj.w") {
      for (let c = 0; c < d.hidden; c++) out[c * d.hidden + c] = 1;
    } else if (name === "gru.bz") {
      out.fill(-2);
    }
    return out;
  });
  setVocoderMeta(ws, d);
  return ws;
}
