/** Node-only compute engine that drives the core through its command-line
 * interface: `extract --format packed` for single surfaces and `bench` for
 * persistent-cache isovalue sequences. Used by tests and local tooling;
 * the browser build excludes this module. */

import { execFile } from "node:child_process";
import { mkdtemp, readFile, rm } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";

import { BenchDoc, FrameStats } from "./stats.js";
import { ComputeEngine, SurfaceUpdate, SweepMode } from "./state.js";

const run = promisify(execFile);

export interface CliEngineOptions {
  python?: string;
  backend?: "gpu" | "cpu";
  cacheFraction?: number;
}

export class CliEngine implements ComputeEngine {
  constructor(private containerPath: string, private opts: CliEngineOptions = {}) {}

  private base(): string[] {
    return ["-m", "bcmc"];
  }

  private python(): string {
    return this.opts.python ?? "python3";
  }

  async extract(isovalue: number): Promise<SurfaceUpdate> {
    const dir = await mkdtemp(join(tmpdir(), "bcmc-viewer-"));
    try {
      const out = join(dir, "surface.packed");
      const args = [...this.base(), "extract", this.containerPath,
                    "--isovalue", String(isovalue), "--format", "packed",
                    "--backend", this.opts.backend ?? "gpu",
                    "--cache-fraction", String(this.opts.cacheFraction ?? 0.1),
                    "-o", out];
      const { stdout } = await run(this.python(), args, { maxBuffer: 1 << 26 });
      const stats = JSON.parse(stdout) as FrameStats;
      const raw = await readFile(out);
      const vertices = new Uint32Array(raw.buffer, raw.byteOffset, raw.byteLength / 4);
      return { stats, vertices: vertices.slice() };
    } finally {
      await rm(dir, { recursive: true, force: true });
    }
  }

  async sweep(mode: SweepMode, lo: number, hi: number, count: number,
              seed = 0): Promise<FrameStats[]> {
    const dir = await mkdtemp(join(tmpdir(), "bcmc-viewer-"));
    try {
      const out = join(dir, "bench.json");
      const cliMode = mode === "random" ? "random" : mode;
      const args = [...this.base(), "bench", this.containerPath,
                    "--mode", cliMode, "--count", String(count),
                    "--range", `${lo},${hi}`, "--seed", String(seed),
                    "--backend", this.opts.backend ?? "gpu",
                    "--cache-fraction", String(this.opts.cacheFraction ?? 0.1),
                    "-o", out];
      await run(this.python(), args, { maxBuffer: 1 << 24 });
      const doc = JSON.parse(await readFile(out, "utf8")) as BenchDoc;
      return doc.frames;
    } finally {
      await rm(dir, { recursive: true, force: true });
    }
  }
}
