import { execFile } from "node:child_process";
import { mkdtemp, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";

const run = promisify(execFile);

export const PYTHON = process.env.BCMC_PYTHON ?? "python3";

export async function tempDir(): Promise<string> {
  return mkdtemp(join(tmpdir(), "bcmc-viewer-test-"));
}

/** Deterministic 32-bit PRNG so fixtures are stable across runs. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

async function compress(raw: string, dims: [number, number, number], rate: number,
                        out: string): Promise<void> {
  await run(PYTHON, ["-m", "bcmc", "compress", raw,
                     "--dims", dims.join(","), "--type", "f32",
                     "--rate", String(rate), "-o", out]);
}

export async function makeRandomContainer(dir: string, n: number, rate: number,
                                          seed = 1): Promise<string> {
  const rng = mulberry32(seed);
  const vals = new Float32Array(n * n * n);
  for (let i = 0; i < vals.length; i++) vals[i] = rng();
  const raw = join(dir, `rand${n}.raw`);
  await writeFile(raw, Buffer.from(vals.buffer));
  const out = join(dir, `rand${n}.bcmc`);
  await compress(raw, [n, n, n], rate, out);
  return out;
}

/** Nested field: value falls off with distance from the center, so an
 * ascending isovalue sweep nests inward (cache-friendly direction). */
export async function makeNestedContainer(dir: string, n: number, rate: number): Promise<string> {
  const vals = new Float32Array(n * n * n);
  const c = (n - 1) / 2;
  let i = 0;
  for (let z = 0; z < n; z++) {
    for (let y = 0; y < n; y++) {
      for (let x = 0; x < n; x++) {
        vals[i++] = n / 2 - Math.hypot(x - c, y - c, z - c);
      }
    }
  }
  const raw = join(dir, `nested${n}.raw`);
  await writeFile(raw, Buffer.from(vals.buffer));
  const out = join(dir, `nested${n}.bcmc`);
  await compress(raw, [n, n, n], rate, out);
  return out;
}

export async function cliExtractStats(container: string, iso: number,
                                      dir: string): Promise<{ vertex_count: number }> {
  const out = join(dir, "cross-check.ply");
  const { stdout } = await run(PYTHON, ["-m", "bcmc", "extract", container,
                                        "--isovalue", String(iso), "-o", out]);
  return JSON.parse(stdout);
}
