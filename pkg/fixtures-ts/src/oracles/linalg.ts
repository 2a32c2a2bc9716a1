/** Small dense linear algebra: row-major Float64 matrices. */

export class Mat {
  constructor(
    public rows: number,
    public cols: number,
    public data: Float64Array = new Float64Array(rows * cols),
  ) {}

  static zeros(rows: number, cols: number): Mat {
    return new Mat(rows, cols);
  }

  static eye(n: number): Mat {
    const m = Mat.zeros(n, n);
    for (let i = 0; i < n; i++) m.set(i, i, 1);
    return m;
  }

  static from(rows: number, cols: number, values: ArrayLike<number>): Mat {
    return new Mat(rows, cols, Float64Array.from(values as number[]));
  }

  get(i: number, j: number): number {
    return this.data[i * this.cols + j];
  }

  set(i: number, j: number, v: number): void {
    this.data[i * this.cols + j] = v;
  }

  row(i: number): Float64Array {
    return this.data.subarray(i * this.cols, (i + 1) * this.cols);
  }

  copy(): Mat {
    return new Mat(this.rows, this.cols, this.data.slice());
  }

  transpose(): Mat {
    const out = Mat.zeros(this.cols, this.rows);
    for (let i = 0; i < this.rows; i++)
      for (let j = 0; j < this.cols; j++) out.set(j, i, this.get(i, j));
    return out;
  }

  matmul(other: Mat): Mat {
    if (this.cols !== other.rows) throw new Error("matmul shape mismatch");
    const out = Mat.zeros(this.rows, other.cols);
    for (let i = 0; i < this.rows; i++) {
      for (let k = 0; k < this.cols; k++) {
        const a = this.get(i, k);
        if (a === 0) continue;
        for (let j = 0; j < other.cols; j++) {
          out.data[i * out.cols + j] += a * other.get(k, j);
        }
      }
    }
    return out;
  }

  matvec(x: ArrayLike<number>): Float64Array {
    const out = new Float64Array(this.rows);
    for (let i = 0; i < this.rows; i++) {
      let acc = 0;
      for (let j = 0; j < this.cols; j++) acc += this.get(i, j) * (x[j] as number);
      out[i] = acc;
    }
    return out;
  }
}

export function dot(a: ArrayLike<number>, b: ArrayLike<number>): number {
  let acc = 0;
  for (let i = 0; i < a.length; i++) acc += (a[i] as number) * (b[i] as number);
  return acc;
}

/** Inverse by Gauss-Jordan with partial pivoting (small matrices only). */
export function inverse(m: Mat): Mat {
  if (m.rows !== m.cols) throw new Error("inverse needs a square matrix");
  const n = m.rows;
  const a = m.copy();
  const inv = Mat.eye(n);
  for (let col = 0; col < n; col++) {
    let pivot = col;
    for (let r = col + 1; r < n; r++) if (Math.abs(a.get(r, col)) > Math.abs(a.get(pivot, col))) pivot = r;
    if (Math.abs(a.get(pivot, col)) < 1e-14) throw new Error("singular matrix");
    if (pivot !== col) {
      for (let j = 0; j < n; j++) {
        [a.data[col * n + j], a.data[pivot * n + j]] = [a.get(pivot, j), a.get(col, j)];
        [inv.data[col * n + j], inv.data[pivot * n + j]] = [inv.get(pivot, j), inv.get(col, j)];
      }
    }
    const p = a.get(col, col);
    for (let j = 0; j < n; j++) {
      a.data[col * n + j] /= p;
      inv.data[col * n + j] /= p;
    }
    for (let r = 0; r < n; r++) {
      if (r === col) continue;
      const f = a.get(r, col);
      if (f === 0) continue;
      for (let j = 0; j < n; j++) {
        a.data[r * n + j] -= f * a.get(col, j);
        inv.data[r * n + j] -= f * inv.get(col, j);
      }
    }
  }
  return inv;
}

export interface EigResult {
  values: Float64Array; // descending
  vectors: Mat; // rows = eigenvectors, matching `values`
}

/** Cyclic Jacobi eigendecomposition of a symmetric matrix. */
export function symmetricEig(sym: Mat, maxSweeps = 64): EigResult {
  const n = sym.rows;
  const a = sym.copy();
  let v = Mat.eye(n);
  for (let sweep = 0; sweep < maxSweeps; sweep++) {
    let off = 0;
    for (let p = 0; p < n - 1; p++)
      for (let q = p + 1; q < n; q++) off += a.get(p, q) ** 2;
    if (Math.sqrt(off) < 1e-13 * (1 + Math.abs(a.data[0]))) break;
    for (let p = 0; p < n - 1; p++) {
      for (let q = p + 1; q < n; q++) {
        const apq = a.get(p, q);
        if (Math.abs(apq) < 1e-300) continue;
        const app = a.get(p, p);
        const aqq = a.get(q, q);
        const theta = (aqq - app) / (2 * apq);
        const t = Math.sign(theta || 1) / (Math.abs(theta) + Math.sqrt(theta * theta + 1));
        const c = 1 / Math.sqrt(t * t + 1);
        const s = t * c;
        for (let k = 0; k < n; k++) {
          const akp = a.get(k, p);
          const akq = a.get(k, q);
          a.set(k, p, c * akp - s * akq);
          a.set(k, q, s * akp + c * akq);
        }
        for (let k = 0; k < n; k++) {
          const apk = a.get(p, k);
          const aqk = a.get(q, k);
          a.set(p, k, c * apk - s * aqk);
          a.set(q, k, s * apk + c * aqk);
        }
        for (let k = 0; k < n; k++) {
          const vkp = v.get(k, p);
          const vkq = v.get(k, q);
          v.set(k, p, c * vkp - s * vkq);
          v.set(k, q, s * vkp + c * vkq);
        }
      }
    }
  }
  const order = Array.from({ length: n }, (_, i) => i).sort((x, y) => a.get(y, y) - a.get(x, x));
  const values = new Float64Array(n);
  const vectors = Mat.zeros(n, n);
  for (let r = 0; r < n; r++) {
    values[r] = a.get(order[r], order[r]);
    for (let k = 0; k < n; k++) vectors.set(r, k, v.get(k, order[r]));
  }
  return { values, vectors };
}
