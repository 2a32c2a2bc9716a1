/** Scale-invariant SNR: project the estimate onto the reference, no mean
 * removal, capped at +-100 dB. */

import { dot } from "./linalg";

export const SI_SNR_CAP_DB = 100;

export function siSnr(estimate: ArrayLike<number>, reference: ArrayLike<number>): number {
  if (estimate.length !== reference.length) throw new Error("length mismatch");
  const refEnergy = dot(reference, reference);
  if (refEnergy === 0) throw new Error("zero-energy reference");
  const alpha = dot(estimate, reference) / refEnergy;
  let num = 0;
  let den = 0;
  for (let i = 0; i < estimate.length; i++) {
    const target = alpha * (reference[i] as number);
    const resid = (estimate[i] as number) - target;
    num += target * target;
    den += resid * resid;
  }
  if (den === 0 || num >= den * 10 ** (SI_SNR_CAP_DB / 10)) return SI_SNR_CAP_DB;
  if (num === 0 || num <= den * 10 ** (-SI_SNR_CAP_DB / 10)) return -SI_SNR_CAP_DB;
  return 10 * Math.log10(num / den);
}

export function siSnrImprovement(
  noisy: ArrayLike<number>,
  enhanced: ArrayLike<number>,
  clean: ArrayLike<number>,
): number {
  return siSnr(enhanced, clean) - siSnr(noisy, clean);
}
