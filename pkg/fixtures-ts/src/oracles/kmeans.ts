/**
 * Lloyd k-means exactly as the codec documents it: seeded Fisher-Yates
 * permutation for the initial codewords (cycling when k exceeds the data
 * count), a fixed iteration count, squared-error assignment with lowest-index
 * tie-breaks, and empty clusters re-seeded from the points farthest from
 * their assigned centroids (farthest first, lowest empty slot first).
 */

import { CounterRng } from "../rng";
import { Mat } from "./linalg";

export function lloyd(data: Mat, k: number, rng: CounterRng, iterations: number): Mat {
  const n = data.rows;
  const d = data.cols;
  if (n === 0) throw new Error("no data");
  const perm = Array.from({ length: n }, (_, i) => i);
  for (let i = n - 1; i > 0; i--) {
    const j = rng.integerBelow(i + 1);
    [perm[i], perm[j]] = [perm[j], perm[i]];
  }
  const centers = Mat.zeros(k, d);
  for (let c = 0; c < k; c++) {
    const src = perm[c % n];
    for (let j = 0; j < d; j++) centers.set(c, j, data.get(src, j));
  }
  const assign = new Int32Array(n);
  const dist = new Float64Array(n);
  for (let iter = 0; iter < iterations; iter++) {
    for (let i = 0; i < n; i++) {
      let best = 0;
      let bestD = Infinity;
      for (let c = 0; c < k; c++) {
        let acc = 0;
        for (let j = 0; j < d; j++) {
          const diff = data.get(i, j) - centers.get(c, j);
          acc += diff * diff;
        }
        if (acc < bestD) {
          bestD = acc;
          best = c;
        }
      }
      assign[i] = best;
      dist[i] = bestD;
    }
    const counts = new Int32Array(k);
    const sums = Mat.zeros(k, d);
    for (let i = 0; i < n; i++) {
      counts[assign[i]]++;
      for (let j = 0; j < d; j++) sums.data[assign[i] * d + j] += data.get(i, j);
    }
    const empty: number[] = [];
    for (let c = 0; c < k; c++) {
      if (counts[c] > 0) {
        for (let j = 0; j < d; j++) centers.set(c, j, sums.get(c, j) / counts[c]);
      } else {
        empty.push(c);
      }
    }
    if (empty.length) {
      const order = Array.from({ length: n }, (_, i) => i).sort((a, b) =>
        dist[b] !== dist[a] ? dist[b] - dist[a] : a - b,
      );
      for (let e = 0; e < empty.length && e < n; e++) {
        const point = order[e];
        for (let j = 0; j < d; j++) centers.set(empty[e], j, data.get(point, j));
      }
    }
  }
  return centers;
}
