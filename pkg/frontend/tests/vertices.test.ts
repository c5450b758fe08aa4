import { describe, expect, it } from "vitest";

import { dequantizeVertex, PackedVertexError, triangleCount, unpackPositions, validatePacked } from "../src/vertices.js";

describe("packed vertex decoding", () => {
  it("maps q=(0,0,0) in block 0 to the volume origin", () => {
    expect(dequantizeVertex(0, 0, 4, 4)).toEqual([0, 0, 0]);
  });

  it("maps full-scale coordinates to the block's far corner", () => {
    const w0 = 1023 | (1023 << 10) | (1023 << 20);
    const [x, y, z] = dequantizeVertex(w0, 0, 4, 4);
    expect(x).toBeCloseTo(4, 6);
    expect(y).toBeCloseTo(4, 6);
    expect(z).toBeCloseTo(4, 6);
  });

  it("offsets by the row-major block origin", () => {
    // block 21 in a 4x4x4 grid sits at coords (1,1,1) -> origin (4,4,4)
    const [x, y, z] = dequantizeVertex(512 | (256 << 10), 21, 4, 4);
    expect(x).toBeCloseTo(4 + (512 * 4) / 1023, 5);
    expect(y).toBeCloseTo(4 + (256 * 4) / 1023, 5);
    expect(z).toBeCloseTo(4, 6);
  });

  it("unpacks flat position arrays", () => {
    const words = new Uint32Array([0, 0, 1023, 0, 0, 1]);
    const pos = unpackPositions(words, 2, 1);
    expect(Array.from(pos.slice(0, 3))).toEqual([0, 0, 0]);
    expect(pos[3]).toBeCloseTo(4, 5);
    expect(pos[6]).toBeCloseTo(4, 6); // block 1 origin x
    expect(triangleCount(words)).toBe(1);
  });

  it("rejects malformed buffers", () => {
    expect(() => validatePacked(new Uint32Array([1 << 30, 0, 0, 0, 0, 0]), 8))
      .toThrow(PackedVertexError);
    expect(() => validatePacked(new Uint32Array([0, 9, 0, 0, 0, 0]), 8))
      .toThrow(/outside grid/);
    expect(() => validatePacked(new Uint32Array([0, 0, 0, 0]), 8))
      .toThrow(/multiple of 3/);
    expect(() => validatePacked(new Uint32Array([0, 0, 0]), 8)).toThrow(/odd/);
    expect(() => validatePacked(new Uint32Array([0, 0, 5, 1, 9, 2]), 8)).not.toThrow();
  });
});
