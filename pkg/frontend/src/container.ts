/** Parser for the .bcmc container (little-endian). */

export interface ContainerInfo {
  dims: [number, number, number];
  paddedDims: [number, number, number];
  nblocks: [number, number, number];
  totalBlocks: number;
  scalarCode: number;
  rateBits: number;
  /** Global (min, max) of the original volume; the isovalue slider bounds. */
  range: [number, number];
  blockBytes: number;
  rangesMin: Float32Array;
  rangesMax: Float32Array;
  bitstreamOffset: number;
  byteLength: number;
}

const MAGIC = 0x434d4342; // "BCMC"
const VERSION = 1;
export const HEADER_BYTES = 72;

export class ContainerError extends Error {}

function readU64(dv: DataView, off: number): number {
  const v = dv.getBigUint64(off, true);
  if (v > BigInt(Number.MAX_SAFE_INTEGER)) throw new ContainerError("extent too large");
  return Number(v);
}

export function parseContainer(buf: ArrayBuffer): ContainerInfo {
  if (buf.byteLength < HEADER_BYTES) {
    throw new ContainerError(`truncated container: ${buf.byteLength} bytes`);
  }
  const dv = new DataView(buf);
  if (dv.getUint32(0, true) !== MAGIC) throw new ContainerError("bad magic");
  const version = dv.getUint32(4, true);
  if (version !== VERSION) throw new ContainerError(`unsupported version ${version}`);

  const dims: [number, number, number] = [readU64(dv, 8), readU64(dv, 16), readU64(dv, 24)];
  const padded: [number, number, number] = [readU64(dv, 32), readU64(dv, 40), readU64(dv, 48)];
  const scalarCode = dv.getUint32(56, true);
  const rateBits = dv.getUint32(60, true);
  const range: [number, number] = [dv.getFloat32(64, true), dv.getFloat32(68, true)];

  for (let a = 0; a < 3; a++) {
    const d = dims[a], p = padded[a];
    if (d <= 0 || p % 4 !== 0 || p < d || p - d >= 4) {
      throw new ContainerError(`inconsistent dims ${dims} / padded ${padded}`);
    }
  }
  const nblocks: [number, number, number] = [padded[0] / 4, padded[1] / 4, padded[2] / 4];
  const totalBlocks = nblocks[0] * nblocks[1] * nblocks[2];
  const blockBytes = Math.ceil((64 * rateBits) / 8);
  const expected = HEADER_BYTES + 8 * totalBlocks + totalBlocks * blockBytes;
  if (buf.byteLength !== expected) {
    throw new ContainerError(`size ${buf.byteLength} != expected ${expected}`);
  }
  const rangesMin = new Float32Array(buf, HEADER_BYTES, totalBlocks);
  const rangesMax = new Float32Array(buf, HEADER_BYTES + 4 * totalBlocks, totalBlocks);
  return {
    dims, paddedDims: padded, nblocks, totalBlocks, scalarCode, rateBits, range,
    blockBytes, rangesMin, rangesMax,
    bitstreamOffset: HEADER_BYTES + 8 * totalBlocks,
    byteLength: buf.byteLength,
  };
}
