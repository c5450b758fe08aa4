/** Packed 8-byte vertices: word 0 carries three 10-bit coordinates over the
 * block-local [0, 4] range (bits 30-31 zero), word 1 the row-major block ID.
 * The renderer consumes this format directly; dequantization happens in the
 * vertex stage, and these helpers mirror that math for tests and CPU paths.
 */

export class PackedVertexError extends Error {}

export function dequantizeVertex(
  word0: number, word1: number, nbx: number, nby: number,
): [number, number, number] {
  const bx = word1 % nbx;
  const by = Math.floor(word1 / nbx) % nby;
  const bz = Math.floor(word1 / (nbx * nby));
  const scale = 4 / 1023;
  return [
    bx * 4 + (word0 & 1023) * scale,
    by * 4 + ((word0 >>> 10) & 1023) * scale,
    bz * 4 + ((word0 >>> 20) & 1023) * scale,
  ];
}

export function validatePacked(words: Uint32Array, totalBlocks: number): void {
  if (words.length % 2 !== 0) throw new PackedVertexError("odd word count");
  if ((words.length / 2) % 3 !== 0) throw new PackedVertexError("vertex count not a multiple of 3");
  for (let i = 0; i < words.length; i += 2) {
    if (words[i] >>> 30) throw new PackedVertexError(`nonzero top bits at vertex ${i / 2}`);
    if (words[i + 1] >= totalBlocks) {
      throw new PackedVertexError(`block ${words[i + 1]} outside grid at vertex ${i / 2}`);
    }
  }
}

/** Expand a packed buffer to flat xyz positions (test/CPU path). */
export function unpackPositions(words: Uint32Array, nbx: number, nby: number): Float32Array {
  const n = words.length / 2;
  const out = new Float32Array(3 * n);
  for (let i = 0; i < n; i++) {
    const [x, y, z] = dequantizeVertex(words[2 * i], words[2 * i + 1], nbx, nby);
    out[3 * i] = x;
    out[3 * i + 1] = y;
    out[3 * i + 2] = z;
  }
  return out;
}

export function triangleCount(words: Uint32Array): number {
  return words.length / 6;
}
