/**
 * Toy training on synthetic harmonic signals.
 *
 * Vocoder: every weight except the mixture-of-logistics head bias is fixed to
 * a constructed "predict next from previous" pathway (autoregressive
 * projection into the first state coordinates, update gate saturated open,
 * candidate reading the input directly). The head bias (logits, mean
 * offsets, log-scales per band) is then fit by gradient descent on the
 * actual teacher-forced negative log-likelihood of the matched signal's QMF
 * band samples; the gradient is exact because the state sequence does not
 * depend on the head bias.
 *
 * Denoiser: filterbanks are fixed cosine/sine analyzers with a ridge
 * pseudo-inverse synthesis bank; block weights are small random values
 * (skip connections keep the features close to the mask filterbank output),
 * and the final transpose-conv mask head is trained by logistic regression
 * against ideal per-filter ratio masks of a clean/noise mixture.
 */

import { CounterRng } from "./rng";
import { Mat, inverse } from "./oracles/linalg";
import { GruWeights, gruStep } from "./oracles/gru";
import { MolParams, logLikelihood, nllGradient, SCALE_FLOOR } from "./oracles/mol";
import { analyze, DEFAULT_PROTOTYPE as QMF_PROTO } from "./oracles/qmf";
import { depthwiseConv1d } from "./oracles/conv";
import { CondStack, VocoderNet, teacherForcedNll } from "./oracles/vocoder";
import { TasNet, TasBlock, denoise } from "./oracles/tasnet";
import { logMel, DEFAULT_MEL } from "./oracles/mel";
import { harmonicSpeech, bandNoise, mixAtSnrDb, toF32 } from "./audio";
import { WeightSet, dense, emptyWeightSet } from "./nvw";
import {
  TOY_TASNET,
  TOY_VOCODER,
  ToyTasDims,
  ToyVocoderDims,
  addTasnetTensors,
  addVocoderTensors,
  gauss,
} from "./weights";

// ---------------------------------------------------------------------------
// vocoder

const AR_GAIN = 0.5;
const MEAN_GAIN = 2.05; // ~ undoes the AR gain and the tanh shrink

function constructedVocoderFill(d: ToyVocoderDims) {
  return (name: string, shape: number[]): Float32Array => {
    const n = shape.reduce((a, b) => a * b, 1);
    const out = new Float32Array(n);
    if (name === "ar_proj.w") {
      for (let b = 0; b < d.bands; b++) out[b * d.bands + b] = AR_GAIN;
    } else if (name === "gru.wn") {
      for (let i = 0; i < d.gru; i++) out[i * d.gru + i] = 1;
    } else if (name === "gru.bz") {
      out.fill(30);
    } else if (name === "mol_proj.w") {
      // mean component 0 of band b reads state coordinate b
      for (let b = 0; b < d.bands; b++) {
        out[(b * 3 * d.nMix + d.nMix) * d.gru + b] = MEAN_GAIN;
      }
    }
    return out;
  };
}

function buildVocoderNet(ws: WeightSet, d: ToyVocoderDims): VocoderNet {
  const t = (name: string) => {
    const entry = ws.tensors.get(name);
    if (!entry || entry.kind !== "dense") throw new Error(`missing tensor ${name}`);
    return entry;
  };
  const mat = (name: string, rows: number, cols: number) =>
    new Mat(rows, cols, Float64Array.from(t(name).data));
  const vec = (name: string) => Float64Array.from(t(name).data);
  const cond: CondStack = {
    convInW: vec("cond.conv_in.w"),
    convInB: vec("cond.conv_in.b"),
    dilW: [1, 2, 3].map((i) => vec(`cond.dil${i}.w`)),
    dilB: [1, 2, 3].map((i) => vec(`cond.dil${i}.b`)),
    upW: [1, 2, 3].map((i) => vec(`cond.up${i}.w`)),
    upB: [1, 2, 3].map((i) => vec(`cond.up${i}.b`)),
    projW: mat("cond.proj.w", d.gru, d.hidden),
    projB: vec("cond.proj.b"),
    hidden: d.hidden,
    nMels: d.nMels,
    dilations: [1, 2, 4],
    tile: 20,
  };
  const gru: GruWeights = {
    wr: mat("gru.wr", d.gru, d.gru),
    wz: mat("gru.wz", d.gru, d.gru),
    wn: mat("gru.wn", d.gru, d.gru),
    ur: mat("gru.ur", d.gru, d.gru),
    uz: mat("gru.uz", d.gru, d.gru),
    un: mat("gru.un", d.gru, d.gru),
    br: vec("gru.br"),
    bz: vec("gru.bz"),
    bn: vec("gru.bn"),
  };
  return {
    cond,
    gru,
    arW: mat("ar_proj.w", d.gru, d.bands),
    arB: vec("ar_proj.b"),
    molW: mat("mol_proj.w", d.bands * 3 * d.nMix, d.gru),
    molB: vec("mol_proj.b"),
    bands: d.bands,
    nMix: d.nMix,
    scaleFloor: SCALE_FLOOR,
    qmfPrototype: Float64Array.from(QMF_PROTO),
  };
}

export interface ToyVocoderResult {
  ws: WeightSet;
  net: VocoderNet;
  features: Mat;
  matched: Float64Array;
  mismatched: Float64Array;
  lossStart: number;
  lossEnd: number;
}

export function trainToyVocoder(seed: number): ToyVocoderResult {
  const d = TOY_VOCODER;
  const nFrames = 4;
  const nSamples = nFrames * 640;
  const matched = harmonicSpeech(nSamples, seed + 1, 150, 0.35);
  const mismatched = harmonicSpeech(nSamples, seed + 2, 487, 0.9);

  const ws = emptyWeightSet();
  addVocoderTensors(ws, d, constructedVocoderFill(d));
  ws.tensors.set("qmf.prototype", dense([QMF_PROTO.length], Float32Array.from(QMF_PROTO)));
  ws.metadata.set("vocoder.cond_hidden", String(d.hidden));
  ws.metadata.set("vocoder.gru_dim", String(d.gru));
  ws.metadata.set("vocoder.n_mix", String(d.nMix));
  ws.metadata.set("qmf.levels", "2");
  ws.metadata.set("mol.scale_floor", String(SCALE_FLOOR));

  let net = buildVocoderNet(ws, d);

  // teacher-forced state sequence (independent of the head bias)
  const bands = analyze(matched, 2, net.qmfPrototype);
  const steps = bands[0].length;
  const states: Float64Array[] = [];
  let h: Float64Array = new Float64Array(d.gru);
  for (let t = 0; t < steps; t++) {
    const prev = new Float64Array(d.bands);
    if (t > 0) for (let b = 0; b < d.bands; b++) prev[b] = bands[b][t - 1];
    const ar = net.arW.matvec(prev);
    for (let i = 0; i < d.gru; i++) ar[i] += net.arB[i];
    h = gruStep(h, ar, net.gru);
    states.push(h);
  }

  const k = d.nMix;
  const bias = new Float64Array(d.bands * 3 * k);
  for (let b = 0; b < d.bands; b++) for (let j = 0; j < k; j++) bias[b * 3 * k + 2 * k + j] = -3;

  const headParams = (b: number, t: number): MolParams => {
    const raw = net.molW.matvec(states[t]);
    const base = b * 3 * k;
    const p: MolParams = {
      logits: new Float64Array(k),
      means: new Float64Array(k),
      logScales: new Float64Array(k),
    };
    for (let j = 0; j < k; j++) {
      p.logits[j] = raw[base + j] + bias[base + j];
      p.means[j] = raw[base + k + j] + bias[base + k + j];
      p.logScales[j] = raw[base + 2 * k + j] + bias[base + 2 * k + j];
    }
    return p;
  };

  const meanLoss = (): number => {
    let acc = 0;
    for (let t = 0; t < steps; t++)
      for (let b = 0; b < d.bands; b++) {
        acc -= logLikelihood(bands[b][t], headParams(b, t), SCALE_FLOOR);
      }
    return acc / (steps * d.bands);
  };

  const lossStart = meanLoss();
  const lr = 0.05;
  for (let epoch = 0; epoch < 120; epoch++) {
    const grad = new Float64Array(bias.length);
    for (let t = 0; t < steps; t++) {
      for (let b = 0; b < d.bands; b++) {
        const g = nllGradient(bands[b][t], headParams(b, t), SCALE_FLOOR);
        const base = b * 3 * k;
        for (let j = 0; j < k; j++) {
          grad[base + j] += g.dLogits[j];
          grad[base + k + j] += g.dMeans[j];
          grad[base + 2 * k + j] += g.dLogScales[j];
        }
      }
    }
    for (let i = 0; i < bias.length; i++) bias[i] -= (lr * grad[i]) / (steps * d.bands);
  }
  const lossEnd = meanLoss();

  const biasF32 = new Float32Array(bias.length);
  for (let i = 0; i < bias.length; i++) biasF32[i] = Math.fround(bias[i]);
  ws.tensors.set("mol_proj.b", dense([bias.length], biasF32));
  net = buildVocoderNet(ws, d);

  const melSetup = { ...DEFAULT_MEL };
  const featMat = logMel(matched, melSetup);
  const features = Mat.zeros(nFrames, d.nMels);
  for (let t = 0; t < nFrames; t++)
    for (let m = 0; m < d.nMels; m++) features.set(t, m, Math.fround(featMat.get(t, m)));

  ws.tensors.set("fixture.features", dense([nFrames, d.nMels], Float32Array.from(features.data, Math.fround)));
  ws.tensors.set("fixture.audio_matched", dense([nSamples], toF32(matched)));
  ws.tensors.set("fixture.audio_mismatched", dense([nSamples], toF32(mismatched)));
  return { ws, net, features, matched, mismatched, lossStart, lossEnd };
}

export function vocoderNllFromWeights(ws: WeightSet, features: Mat, audio: Float64Array): number {
  return teacherForcedNll(features, audio, buildVocoderNet(ws, TOY_VOCODER));
}

// ---------------------------------------------------------------------------
// denoiser

function cosineFilterbank(nFilters: number, window: number, fLo: number, fHi: number): Mat {
  const out = Mat.zeros(nFilters, window);
  const nPairs = nFilters / 2;
  for (let m = 0; m < nPairs; m++) {
    const f = fLo + ((fHi - fLo) * m) / (nPairs - 1);
    for (let n = 0; n < window; n++) {
      const hann = 0.5 - 0.5 * Math.cos((2 * Math.PI * n) / window);
      const phase = (2 * Math.PI * f * n) / 16000;
      out.set(2 * m, n, hann * Math.cos(phase));
      out.set(2 * m + 1, n, hann * Math.sin(phase));
    }
  }
  return out;
}

function ridgePseudoInverseSynthesis(fb: Mat, ridge = 1e-6): Mat {
  // G = F (F^T F + ridge I)^-1 so that G^T F ~ I on the frame space
  const gram = fb.transpose().matmul(fb);
  for (let i = 0; i < gram.rows; i++) gram.data[i * gram.cols + i] += ridge;
  return fb.matmul(inverse(gram));
}

function buildTasNet(ws: WeightSet, d: ToyTasDims): TasNet {
  const t = (name: string) => {
    const entry = ws.tensors.get(name);
    if (!entry || entry.kind !== "dense") throw new Error(`missing tensor ${name}`);
    return entry;
  };
  const mat = (name: string, rows: number, cols: number) =>
    new Mat(rows, cols, Float64Array.from(t(name).data));
  const vec = (name: string) => Float64Array.from(t(name).data);
  const blocks: TasBlock[] = [];
  for (let k = 0; k < d.repeats * d.blocksPerRepeat; k++) {
    const p = `tasnet.block${String(k).padStart(2, "0")}`;
    blocks.push({
      inW: mat(`${p}.in.w`, d.channels, d.hidden),
      inB: vec(`${p}.in.b`),
      inAlpha: vec(`${p}.in_prelu.a`),
      dwW: mat(`${p}.dw.w`, d.channels, d.dwKernel),
      dwB: vec(`${p}.dw.b`),
      dwAlpha: vec(`${p}.dw_prelu.a`),
      outW: mat(`${p}.out.w`, d.hidden, d.channels),
      outB: vec(`${p}.out.b`),
      dilation: 2 ** (k % 10),
    });
  }
  return {
    fbIn: mat("tasnet.fb_in.w", d.filters, d.window),
    fbMask: mat("tasnet.fb_mask.w", d.maskFilters, d.window),
    fbOut: mat("tasnet.fb_out.w", d.filters, d.window),
    blocks,
    maskOutW: vec("tasnet.mask_out.w"),
    maskOutB: vec("tasnet.mask_out.b"),
    maskOutKernel: d.maskOutKernel,
    window: d.window,
    stride: d.stride,
    lookaheadFrames: d.lookahead,
  };
}

export interface ToyDenoiserResult {
  ws: WeightSet;
  net: TasNet;
  noisy: Float64Array;
  clean: Float64Array;
  lossStart: number;
  lossEnd: number;
}

export function trainToyDenoiser(seed: number): ToyDenoiserResult {
  const d = TOY_TASNET;
  const rng = new CounterRng(seed + 10);

  const ws = emptyWeightSet();
  addTasnetTensors(ws, d, (name, shape) => {
    const n = shape.reduce((a, b) => a * b, 1);
    if (name.endsWith("_prelu.a")) return new Float32Array(n).fill(0.25);
    if (name.endsWith(".b")) return new Float32Array(n);
    if (name.endsWith(".dw.w")) {
      const out = new Float32Array(n);
      for (let c = 0; c < shape[0]; c++) out[c * shape[1]] = 1; // passthrough tap
      const jitter = gauss(rng, n, 0.02);
      for (let i = 0; i < n; i++) out[i] = Math.fround(out[i] + jitter[i]);
      return out;
    }
    return gauss(rng, n, 0.05 / Math.sqrt(shape.length > 1 ? n / shape[0] : n));
  });
  const fbIn = cosineFilterbank(d.filters, d.window, 250, 7750);
  const fbMask = cosineFilterbank(d.maskFilters, d.window, 250, 7750);
  const fbOut = ridgePseudoInverseSynthesis(fbIn);
  ws.tensors.set("tasnet.fb_in.w", dense([d.filters, d.window], Float32Array.from(fbIn.data, Math.fround)));
  ws.tensors.set("tasnet.fb_mask.w", dense([d.maskFilters, d.window], Float32Array.from(fbMask.data, Math.fround)));
  ws.tensors.set("tasnet.fb_out.w", dense([d.filters, d.window], Float32Array.from(fbOut.data, Math.fround)));
  ws.metadata.set("tasnet.n_filters", String(d.filters));
  ws.metadata.set("tasnet.window", String(d.window));
  ws.metadata.set("tasnet.stride", String(d.stride));
  ws.metadata.set("tasnet.mask_filters", String(d.maskFilters));
  ws.metadata.set("tasnet.n_repeats", String(d.repeats));
  ws.metadata.set("tasnet.blocks_per_repeat", String(d.blocksPerRepeat));
  ws.metadata.set("tasnet.block_channels", String(d.channels));
  ws.metadata.set("tasnet.hidden", String(d.hidden));
  ws.metadata.set("tasnet.lookahead_frames", String(d.lookahead));

  // training mixture: low-band harmonics + high-band noise at 2 dB
  const nTrain = 8000;
  const clean = harmonicSpeech(nTrain, seed + 20, 220, 0.55);
  const noise = bandNoise(nTrain, seed + 21, 3000, 7500, 40, 0.55);
  const mixture = mixAtSnrDb(clean, noise, 2);

  let net = buildTasNet(ws, d);
  const L = d.lookahead;
  const nFrames = Math.ceil(nTrain / d.stride);

  // per-frame filterbank responses of the separated components -> ideal masks
  const frame = new Float64Array(d.window);
  const targets = Mat.zeros(nFrames, d.filters);
  for (let t = 0; t < nFrames; t++) {
    for (let f = 0; f < d.filters; f++) {
      let c = 0;
      let n = 0;
      for (let w = 0; w < d.window; w++) {
        const src = t * d.stride + w;
        const cs = src < nTrain ? clean[src] : 0;
        const ns = src < nTrain ? mixture[src] - clean[src] : 0;
        c += net.fbIn.get(f, w) * cs;
        n += net.fbIn.get(f, w) * ns;
      }
      targets.set(t, f, (c * c) / (c * c + n * n + 1e-9));
    }
  }

  // mask-net features for the padded mixture
  const padded = new Float64Array(nTrain + L * d.stride);
  padded.set(mixture);
  const nAll = Math.ceil(padded.length / d.stride);
  const framedFeatures = Mat.zeros(nAll, d.maskFilters);
  for (let t = 0; t < nAll; t++) {
    frame.fill(0);
    for (let w = 0; w < d.window; w++) {
      const src = t * d.stride + w;
      if (src < padded.length) frame[w] = padded[src];
    }
    for (let f = 0; f < d.maskFilters; f++) {
      let acc = 0;
      for (let w = 0; w < d.window; w++) acc += net.fbMask.get(f, w) * frame[w];
      framedFeatures.set(t, f, acc);
    }
  }
  let y = framedFeatures;
  for (const block of net.blocks) {
    let a = y.matmul(block.inW.transpose());
    for (let i = 0; i < a.rows; i++)
      for (let c = 0; c < a.cols; c++) {
        let v = a.get(i, c) + block.inB[c];
        if (v < 0) v *= block.inAlpha[c];
        a.set(i, c, v);
      }
    a = depthwiseConv1d(a, block.dwW, block.dilation);
    for (let i = 0; i < a.rows; i++)
      for (let c = 0; c < a.cols; c++) {
        let v = a.get(i, c) + block.dwB[c];
        if (v < 0) v *= block.dwAlpha[c];
        a.set(i, c, v);
      }
    const residual = a.matmul(block.outW.transpose());
    const next = y.copy();
    for (let i = 0; i < next.data.length; i++) next.data[i] += residual.data[i];
    for (let i = 0; i < next.rows; i++)
      for (let c = 0; c < next.cols; c++) next.set(i, c, next.get(i, c) + block.outB[c]);
    y = next;
  }

  // logistic regression of the transpose-conv head on ideal masks
  const kW = d.maskOutKernel;
  const wHead = new Float64Array(d.filters * d.maskFilters * kW);
  const bHead = new Float64Array(d.filters);
  const sigmoid = (v: number) => (v >= 0 ? 1 / (1 + Math.exp(-v)) : Math.exp(v) / (1 + Math.exp(v)));
  const logits = (tau: number, f: number): number => {
    let acc = bHead[f];
    for (let w = 0; w < kW; w++) {
      const src = tau - w;
      if (src < 0) continue;
      for (let c = 0; c < d.maskFilters; c++) {
        acc += wHead[(f * d.maskFilters + c) * kW + w] * y.get(src, c);
      }
    }
    return acc;
  };
  const crossEntropy = (): number => {
    let acc = 0;
    for (let t = 0; t < nFrames; t++)
      for (let f = 0; f < d.filters; f++) {
        const p = sigmoid(logits(t + L, f));
        const r = targets.get(t, f);
        acc -= r * Math.log(p + 1e-12) + (1 - r) * Math.log(1 - p + 1e-12);
      }
    return acc / (nFrames * d.filters);
  };

  const lossStart = crossEntropy();
  const lr = 0.4;
  for (let epoch = 0; epoch < 60; epoch++) {
    const gW = new Float64Array(wHead.length);
    const gB = new Float64Array(bHead.length);
    for (let t = 0; t < nFrames; t++) {
      const tau = t + L;
      for (let f = 0; f < d.filters; f++) {
        const err = sigmoid(logits(tau, f)) - targets.get(t, f);
        gB[f] += err;
        for (let w = 0; w < kW; w++) {
          const src = tau - w;
          if (src < 0) continue;
          for (let c = 0; c < d.maskFilters; c++) {
            gW[(f * d.maskFilters + c) * kW + w] += err * y.get(src, c);
          }
        }
      }
    }
    const scale = lr / nFrames;
    for (let i = 0; i < wHead.length; i++) wHead[i] -= scale * gW[i];
    for (let i = 0; i < bHead.length; i++) bHead[i] -= scale * gB[i];
  }
  const lossEnd = crossEntropy();

  ws.tensors.set(
    "tasnet.mask_out.w",
    dense([d.filters, d.maskFilters, kW], Float32Array.from(wHead, Math.fround)),
  );
  ws.tensors.set("tasnet.mask_out.b", dense([d.filters], Float32Array.from(bHead, Math.fround)));
  net = buildTasNet(ws, d);

  // held-out validation mixture
  const nVal = 6000;
  const cleanVal = harmonicSpeech(nVal, seed + 30, 180, 0.55);
  const noiseVal = bandNoise(nVal, seed + 31, 3000, 7500, 40, 0.55);
  const noisyVal = mixAtSnrDb(cleanVal, noiseVal, 2);
  ws.tensors.set("fixture.noisy", dense([nVal], toF32(noisyVal)));
  ws.tensors.set("fixture.clean", dense([nVal], toF32(cleanVal)));
  return { ws, net, noisy: noisyVal, clean: cleanVal, lossStart, lossEnd };
}

export function denoiseWithWeights(ws: WeightSet, audio: Float64Array): Float64Array {
  return denoise(audio, buildTasNet(ws, TOY_TASNET));
}
