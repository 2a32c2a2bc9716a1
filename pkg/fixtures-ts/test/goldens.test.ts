import { describe, expect, it } from "vitest";

import { allGoldens, emitGolden } from "../src/goldens";
import { readWeights } from "../src/nvw";

describe("golden emission", () => {
  const files = allGoldens(0);

  it("covers the kernel ops with at least 100 cases each", () => {
    const byOp = new Map(files.map((f) => [f.ws.metadata.get("golden.op")!, f]));
    for (const op of ["conv1d", "transpose_conv1d", "depthwise_conv1d", "gru_step", "matvec"]) {
      const file = byOp.get(op);
      expect(file, op).toBeDefined();
      expect(Number(file!.ws.metadata.get("golden.cases"))).toBeGreaterThanOrEqual(100);
    }
  });

  for (const file of allGoldens(0)) {
    it(`${file.filename} self-validates after serialization`, () => {
      const buf = emitGolden(file); // throws if any case fails re-verification
      const parsed = readWeights(buf);
      expect(parsed.metadata.get("golden.op")).toBe(file.ws.metadata.get("golden.op"));
      expect(Number(parsed.metadata.get("golden.cases"))).toBeGreaterThan(0);
    });
  }

  it("emission is deterministic byte for byte", () => {
    const a = allGoldens(0).map((f) => emitGolden(f));
    const b = allGoldens(0).map((f) => emitGolden(f));
    for (let i = 0; i < a.length; i++) expect(a[i].equals(b[i])).toBe(true);
  });
});
