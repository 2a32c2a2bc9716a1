/**
 * NVW1 tensor container (little-endian) — the interchange format between the
 * fixtures generator and the engine:
 *
 *   "NVW1" | version u8 | count u32
 *   per tensor: name (u16 len + UTF-8) | dtype u8 (0 = f32) | rank u8 |
 *               dims u32* | layout u8
 *     layout 0 dense:        prod(dims) f32
 *     layout 1 block-sparse: n u32, n ascending row-major 4x4 block ids u32,
 *                            n * 16 f32
 *     layout 2 block-diag:   n u32, diagonal blocks back to back
 *   metadata: count u32, then (key u16+UTF-8, value u16+UTF-8) pairs
 *
 * Tensors and metadata are written in sorted name order, so emission is
 * deterministic byte for byte.
 */

export interface DenseTensor {
  kind: "dense";
  shape: number[];
  data: Float32Array;
}

export interface BlockSparseTensor {
  kind: "sparse";
  rows: number;
  cols: number;
  ids: Uint32Array; // ascending row-major block ids
  blocks: Float32Array; // ids.length * 16
}

export interface BlockDiagTensor {
  kind: "diag";
  dim: number;
  nBlocks: number;
  blocks: Float32Array; // nBlocks * b * b
}

export type Entry = DenseTensor | BlockSparseTensor | BlockDiagTensor;

export interface WeightSet {
  tensors: Map<string, Entry>;
  metadata: Map<string, string>;
}

export function dense(shape: number[], data: Float32Array | number[]): DenseTensor {
  const flat = data instanceof Float32Array ? data : Float32Array.from(data);
  const expect = shape.reduce((a, b) => a * b, 1);
  if (flat.length !== expect) throw new Error(`shape ${shape} wants ${expect} values, got ${flat.length}`);
  return { kind: "dense", shape: [...shape], data: flat };
}

export function emptyWeightSet(): WeightSet {
  return { tensors: new Map(), metadata: new Map() };
}

class Writer {
  private parts: Buffer[] = [];

  u8(v: number) {
    this.parts.push(Buffer.from([v & 0xff]));
  }

  u16(v: number) {
    const b = Buffer.alloc(2);
    b.writeUInt16LE(v);
    this.parts.push(b);
  }

  u32(v: number) {
    const b = Buffer.alloc(4);
    b.writeUInt32LE(v >>> 0);
    this.parts.push(b);
  }

  str(s: string) {
    const raw = Buffer.from(s, "utf-8");
    this.u16(raw.length);
    this.parts.push(raw);
  }

  f32array(a: Float32Array) {
    const b = Buffer.alloc(4 * a.length);
    for (let i = 0; i < a.length; i++) b.writeFloatLE(a[i], 4 * i);
    this.parts.push(b);
  }

  u32array(a: Uint32Array) {
    const b = Buffer.alloc(4 * a.length);
    for (let i = 0; i < a.length; i++) b.writeUInt32LE(a[i], 4 * i);
    this.parts.push(b);
  }

  raw(b: Buffer) {
    this.parts.push(b);
  }

  done(): Buffer {
    return Buffer.concat(this.parts);
  }
}

export function writeWeights(ws: WeightSet): Buffer {
  const w = new Writer();
  w.raw(Buffer.from("NVW1", "ascii"));
  w.u8(1);
  const names = [...ws.tensors.keys()].sort();
  w.u32(names.length);
  for (const name of names) {
    const entry = ws.tensors.get(name)!;
    w.str(name);
    w.u8(0); // f32
    if (entry.kind === "dense") {
      w.u8(entry.shape.length);
      for (const d of entry.shape) w.u32(d);
      w.u8(0);
      w.f32array(entry.data);
    } else if (entry.kind === "sparse") {
      w.u8(2);
      w.u32(entry.rows);
      w.u32(entry.cols);
      w.u8(1);
      w.u32(entry.ids.length);
      w.u32array(entry.ids);
      w.f32array(entry.blocks);
    } else {
      w.u8(2);
      w.u32(entry.dim);
      w.u32(entry.dim);
      w.u8(2);
      w.u32(entry.nBlocks);
      w.f32array(entry.blocks);
    }
  }
  const keys = [...ws.metadata.keys()].sort();
  w.u32(keys.length);
  for (const key of keys) {
    w.str(key);
    w.str(ws.metadata.get(key)!);
  }
  return w.done();
}

class Reader {
  private off = 0;

  constructor(private buf: Buffer) {}

  private need(n: number, what: string) {
    if (this.off + n > this.buf.length) throw new Error(`truncated container at ${what}`);
  }

  u8(what: string): number {
    this.need(1, what);
    return this.buf[this.off++];
  }

  u16(what: string): number {
    this.need(2, what);
    const v = this.buf.readUInt16LE(this.off);
    this.off += 2;
    return v;
  }

  u32(what: string): number {
    this.need(4, what);
    const v = this.buf.readUInt32LE(this.off);
    this.off += 4;
    return v;
  }

  str(what: string): string {
    const n = this.u16(what);
    this.need(n, what);
    const s = this.buf.toString("utf-8", this.off, this.off + n);
    this.off += n;
    return s;
  }

  f32array(n: number, what: string): Float32Array {
    this.need(4 * n, what);
    const out = new Float32Array(n);
    for (let i = 0; i < n; i++) out[i] = this.buf.readFloatLE(this.off + 4 * i);
    this.off += 4 * n;
    return out;
  }

  u32array(n: number, what: string): Uint32Array {
    this.need(4 * n, what);
    const out = new Uint32Array(n);
    for (let i = 0; i < n; i++) out[i] = this.buf.readUInt32LE(this.off + 4 * i);
    this.off += 4 * n;
    return out;
  }

  atEnd(): boolean {
    return this.off === this.buf.length;
  }
}

export function readWeights(buf: Buffer): WeightSet {
  const r = new Reader(buf);
  const magic = Buffer.from([r.u8("magic"), r.u8("magic"), r.u8("magic"), r.u8("magic")]).toString("ascii");
  if (magic !== "NVW1") throw new Error(`bad magic ${magic}`);
  const version = r.u8("version");
  if (version !== 1) throw new Error(`unsupported version ${version}`);
  const count = r.u32("count");
  const ws = emptyWeightSet();
  for (let i = 0; i < count; i++) {
    const name = r.str("name");
    const dtype = r.u8("dtype");
    if (dtype !== 0) throw new Error(`tensor ${name}: bad dtype ${dtype}`);
    const rank = r.u8("rank");
    const dims: number[] = [];
    for (let d = 0; d < rank; d++) dims.push(r.u32("dim"));
    const layout = r.u8("layout");
    if (layout === 0) {
      const n = dims.reduce((a, b) => a * b, 1);
      ws.tensors.set(name, dense(dims, r.f32array(n, name)));
    } else if (layout === 1) {
      const n = r.u32("block count");
      const ids = r.u32array(n, name);
      const blocks = r.f32array(n * 16, name);
      ws.tensors.set(name, { kind: "sparse", rows: dims[0], cols: dims[1], ids, blocks });
    } else if (layout === 2) {
      const n = r.u32("block count");
      const b = dims[0] / n;
      ws.tensors.set(name, { kind: "diag", dim: dims[0], nBlocks: n, blocks: r.f32array(n * b * b, name) });
    } else {
      throw new Error(`tensor ${name}: unknown layout ${layout}`);
    }
  }
  const metaCount = r.u32("metadata count");
  for (let i = 0; i < metaCount; i++) {
    const key = r.str("key");
    ws.metadata.set(key, r.str("value"));
  }
  if (!r.atEnd()) throw new Error("trailing bytes");
  return ws;
}
