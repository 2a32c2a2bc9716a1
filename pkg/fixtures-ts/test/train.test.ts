import { describe, expect, it } from "vitest";

import { trainToyDenoiser, trainToyVocoder, vocoderNllFromWeights, denoiseWithWeights } from "../src/train";
import { siSnr, siSnrImprovement } from "../src/oracles/sisnr";
import { readWeights, writeWeights } from "../src/nvw";

describe("toy-trained vocoder", () => {
  const result = trainToyVocoder(0);

  it("training reduces the teacher-forced NLL", () => {
    expect(result.lossEnd).toBeLessThan(result.lossStart);
  });

  it("matched audio scores a lower NLL than mismatched audio", () => {
    const matched = vocoderNllFromWeights(result.ws, result.features, result.matched);
    const mismatched = vocoderNllFromWeights(result.ws, result.features, result.mismatched);
    expect(matched).toBeLessThan(mismatched);
  });

  it("ordering survives serialization", () => {
    const back = readWeights(writeWeights(result.ws));
    const matched = vocoderNllFromWeights(back, result.features, result.matched);
    const mismatched = vocoderNllFromWeights(back, result.features, result.mismatched);
    expect(matched).toBeLessThan(mismatched);
  });

  it("is deterministic in the seed", () => {
    const again = trainToyVocoder(0);
    expect(writeWeights(again.ws).equals(writeWeights(result.ws))).toBe(true);
  });
});

describe("toy-trained denoiser", () => {
  const result = trainToyDenoiser(0);

  it("training reduces the mask cross-entropy", () => {
    expect(result.lossEnd).toBeLessThan(result.lossStart);
  });

  it("achieves positive SI-SNRi on its held-out mixture", () => {
    const enhanced = denoiseWithWeights(result.ws, result.noisy);
    const improvement = siSnrImprovement(result.noisy, enhanced, result.clean);
    expect(improvement).toBeGreaterThan(0);
  });

  it("improves over the raw mixture after serialization too", () => {
    const back = readWeights(writeWeights(result.ws));
    const enhanced = denoiseWithWeights(back, result.noisy);
    expect(siSnr(enhanced, result.clean)).toBeGreaterThan(siSnr(result.noisy, result.clean));
  });
});
