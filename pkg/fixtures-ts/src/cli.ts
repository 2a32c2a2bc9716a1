/**
 * Golden/weight emission entry point.
 *
 *   ts-node src/cli.ts [--seed N] [--out DIR]
 *
 * Writes every golden file (self-validating each after serialization) plus
 * the weight-set kinds: random, identityish, and the two toy-trained models
 * with their fixture signals embedded.
 */

import * as fs from "fs";
import * as path from "path";

import { allGoldens, emitGolden } from "./goldens";
import { writeWeights } from "./nvw";
import { identityishWeightSet, randomWeightSet } from "./weights";
import { trainToyDenoiser, trainToyVocoder, vocoderNllFromWeights, denoiseWithWeights } from "./train";
import { siSnrImprovement } from "./oracles/sisnr";

function parseArgs(): { seed: number; out: string } {
  const args = process.argv.slice(2);
  let seed = 0;
  let out = path.join(__dirname, "..", "..", "goldens");
  for (let i = 0; i < args.length; i++) {
    if (args[i] === "--seed") seed = Number(args[++i]);
    else if (args[i] === "--out") out = args[++i];
    else throw new Error(`unknown argument ${args[i]}`);
  }
  return { seed, out };
}

function main(): void {
  const { seed, out } = parseArgs();
  fs.mkdirSync(out, { recursive: true });

  for (const golden of allGoldens(seed)) {
    const buf = emitGolden(golden); // validates after serialization
    fs.writeFileSync(path.join(out, golden.filename), buf);
    const cases = golden.ws.metadata.get("golden.cases");
    console.log(`wrote ${golden.filename} (${cases} cases, ${buf.length} bytes) [validated]`);
  }

  const random = writeWeights(randomWeightSet(seed));
  fs.writeFileSync(path.join(out, "weights_random.nvw"), random);
  console.log(`wrote weights_random.nvw (${random.length} bytes)`);

  const identityish = writeWeights(identityishWeightSet());
  fs.writeFileSync(path.join(out, "weights_identityish.nvw"), identityish);
  console.log(`wrote weights_identityish.nvw (${identityish.length} bytes)`);

  const voc = trainToyVocoder(seed);
  const nllMatched = vocoderNllFromWeights(voc.ws, voc.features, voc.matched);
  const nllMismatched = vocoderNllFromWeights(voc.ws, voc.features, voc.mismatched);
  if (!(nllMatched < nllMismatched)) {
    throw new Error(`toy vocoder failed ordering: ${nllMatched} !< ${nllMismatched}`);
  }
  fs.writeFileSync(path.join(out, "weights_toy_vocoder.nvw"), writeWeights(voc.ws));
  console.log(
    `wrote weights_toy_vocoder.nvw (loss ${voc.lossStart.toFixed(3)} -> ${voc.lossEnd.toFixed(3)}, ` +
      `NLL matched ${nllMatched.toFixed(3)} < mismatched ${nllMismatched.toFixed(3)})`,
  );

  const den = trainToyDenoiser(seed);
  const enhanced = denoiseWithWeights(den.ws, den.noisy);
  const improvement = siSnrImprovement(den.noisy, enhanced, den.clean);
  if (!(improvement > 0)) {
    throw new Error(`toy denoiser failed SI-SNRi: ${improvement}`);
  }
  fs.writeFileSync(path.join(out, "weights_toy_denoiser.nvw"), writeWeights(den.ws));
  console.log(
    `wrote weights_toy_denoiser.nvw (loss ${den.lossStart.toFixed(3)} -> ${den.lossEnd.toFixed(3)}, ` +
      `SI-SNRi ${improvement.toFixed(2)} dB)`,
  );
}

main();
