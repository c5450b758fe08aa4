import { readFile } from "node:fs/promises";
import { beforeAll, describe, expect, it } from "vitest";

import { ContainerError, HEADER_BYTES, parseContainer } from "../src/container.js";
import { makeRandomContainer, tempDir } from "./helpers.js";

let bytes: ArrayBuffer;

beforeAll(async () => {
  const dir = await tempDir();
  const path = await makeRandomContainer(dir, 12, 4);
  const buf = await readFile(path);
  bytes = buf.buffer.slice(buf.byteOffset, buf.byteOffset + buf.byteLength);
});

describe("parseContainer", () => {
  it("reads header fields written by the compressor", () => {
    const info = parseContainer(bytes);
    expect(info.dims).toEqual([12, 12, 12]);
    expect(info.paddedDims).toEqual([12, 12, 12]);
    expect(info.nblocks).toEqual([3, 3, 3]);
    expect(info.totalBlocks).toBe(27);
    expect(info.rateBits).toBe(4);
    expect(info.scalarCode).toBe(2);
    expect(info.blockBytes).toBe(32);
    expect(info.byteLength).toBe(HEADER_BYTES + 8 * 27 + 27 * 32);
  });

  it("exposes per-block ranges within the global range", () => {
    const info = parseContainer(bytes);
    expect(info.rangesMin.length).toBe(27);
    expect(info.rangesMax.length).toBe(27);
    for (let b = 0; b < 27; b++) {
      expect(info.rangesMin[b]).toBeLessThanOrEqual(info.rangesMax[b]);
      expect(info.rangesMin[b]).toBeGreaterThanOrEqual(info.range[0]);
      expect(info.rangesMax[b]).toBeLessThanOrEqual(info.range[1]);
    }
  });

  it("rejects bad magic, bad version, and truncation", () => {
    const corrupt = bytes.slice(0);
    new DataView(corrupt).setUint32(0, 0xdeadbeef, true);
    expect(() => parseContainer(corrupt)).toThrow(ContainerError);

    const badVersion = bytes.slice(0);
    new DataView(badVersion).setUint32(4, 9, true);
    expect(() => parseContainer(badVersion)).toThrow(/version/);

    expect(() => parseContainer(bytes.slice(0, 40))).toThrow(/truncated/);
    expect(() => parseContainer(bytes.slice(0, bytes.byteLength - 8))).toThrow(/size/);
  });
});
