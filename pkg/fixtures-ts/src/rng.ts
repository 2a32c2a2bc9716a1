/**
 * Counter-based SplitMix64 generator.
 *
 * Draw k of stream `seed` is mix64(seed + k * GAMMA) over wrapping 64-bit
 * arithmetic; uniforms map the top 53 bits to the open interval (0, 1) via
 * ((z >> 11) + 0.5) * 2^-53. Both halves of that contract are pure IEEE-754
 * operations, so any implementation of it produces identical doubles for
 * identical (seed, counter) pairs.
 */

const MASK = (1n << 64n) - 1n;
const GAMMA = 0x9e3779b97f4a7c15n;
const MIX1 = 0xbf58476d1ce4e5b9n;
const MIX2 = 0x94d049bb133111ebn;

function mix64(z: bigint): bigint {
  z = ((z ^ (z >> 30n)) * MIX1) & MASK;
  z = ((z ^ (z >> 27n)) * MIX2) & MASK;
  return z ^ (z >> 31n);
}

export class CounterRng {
  seed: bigint;
  counter: bigint;

  constructor(seed: number | bigint, counter: number | bigint = 0) {
    this.seed = BigInt(seed) & MASK;
    this.counter = BigInt(counter);
  }

  u64(): bigint {
    const z = mix64((this.seed + this.counter * GAMMA) & MASK);
    this.counter += 1n;
    return z;
  }

  /** Uniform double in (0, 1). */
  uniform(): number {
    return (Number(this.u64() >> 11n) + 0.5) * 2 ** -53;
  }

  uniforms(n: number): Float64Array {
    const out = new Float64Array(n);
    for (let i = 0; i < n; i++) out[i] = this.uniform();
    return out;
  }

  /** Integer in [0, bound): floor(u * bound), exactly as the engine defines it. */
  integerBelow(bound: number): number {
    return Math.min(Math.floor(this.uniform() * bound), bound - 1);
  }

  /** Standard normals via Box-Muller over consecutive uniform pairs. */
  normals(n: number): Float64Array {
    const out = new Float64Array(n);
    for (let i = 0; i < n; i++) {
      const u1 = this.uniform();
      const u2 = this.uniform();
      out[i] = Math.sqrt(-2 * Math.log(u1)) * Math.cos(2 * Math.PI * u2);
    }
    return out;
  }
}
