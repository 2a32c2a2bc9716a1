import { describe, expect, it } from "vitest";

import { dense, emptyWeightSet, readWeights, writeWeights } from "../src/nvw";
import { identityishWeightSet, randomWeightSet } from "../src/weights";

describe("NVW1 container", () => {
  it("round-trips dense, block-sparse and block-diagonal entries", () => {
    const ws = emptyWeightSet();
    ws.tensors.set("a.v", dense([3], Float32Array.from([1, -2, 0.5])));
    ws.tensors.set("b.m", dense([2, 2], Float32Array.from([1, 2, 3, 4])));
    ws.tensors.set("c.sparse", {
      kind: "sparse",
      rows: 8,
      cols: 8,
      ids: Uint32Array.from([0, 3]),
      blocks: Float32Array.from({ length: 32 }, (_, i) => i * 0.25),
    });
    ws.tensors.set("d.diag", {
      kind: "diag",
      dim: 6,
      nBlocks: 2,
      blocks: Float32Array.from({ length: 18 }, (_, i) => i),
    });
    ws.metadata.set("key", "value");
    const back = readWeights(writeWeights(ws));
    expect([...back.tensors.keys()].sort()).toEqual(["a.v", "b.m", "c.sparse", "d.diag"]);
    const sparse = back.tensors.get("c.sparse")!;
    if (sparse.kind !== "sparse") throw new Error("layout lost");
    expect(Array.from(sparse.ids)).toEqual([0, 3]);
    expect(back.metadata.get("key")).toBe("value");
  });

  it("rejects bad magic and truncation", () => {
    const buf = writeWeights(randomWeightSet(0));
    expect(() => readWeights(Buffer.concat([Buffer.from("XXXX"), buf.subarray(4)]))).toThrow(/magic/);
    expect(() => readWeights(buf.subarray(0, buf.length - 3))).toThrow(/truncated|trailing/);
  });

  it("random weight emission is byte-for-byte reproducible", () => {
    const a = writeWeights(randomWeightSet(0));
    const b = writeWeights(randomWeightSet(0));
    expect(a.equals(b)).toBe(true);
    const c = writeWeights(randomWeightSet(1));
    expect(a.equals(c)).toBe(false);
  });

  it("identityish emission is deterministic", () => {
    const a = writeWeights(identityishWeightSet());
    const b = writeWeights(identityishWeightSet());
    expect(a.equals(b)).toBe(true);
  });
});
