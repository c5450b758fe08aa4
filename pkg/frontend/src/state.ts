/** Viewer state: container metadata, current isovalue, camera, overlay
 * numbers, and the single-in-flight compute policy. All surface math goes
 * through a ComputeEngine; this module never reimplements pipeline logic. */

import { ContainerInfo, parseContainer } from "./container.js";
import { OrbitCamera } from "./camera.js";
import { FrameStats, overlayLines } from "./stats.js";

export interface SurfaceUpdate {
  stats: FrameStats;
  /** Packed 8-byte vertices, ready for the render buffer. */
  vertices: Uint32Array;
}

export type SweepMode = "sweep-up" | "sweep-down" | "random";

export interface ComputeEngine {
  extract(isovalue: number): Promise<SurfaceUpdate>;
  /** Persistent-cache isovalue sequence; returns per-frame stats
   * (the first, warm-up frame is already discarded by the core). */
  sweep(mode: SweepMode, lo: number, hi: number, count: number, seed?: number): Promise<FrameStats[]>;
}

export interface ViewerOptions {
  onSurface?: (update: SurfaceUpdate) => void;
  onError?: (err: Error) => void;
}

export function parseQuery(search: string): { iso?: number; url?: string } {
  const q = new URLSearchParams(search.startsWith("?") ? search.slice(1) : search);
  const out: { iso?: number; url?: string } = {};
  const iso = q.get("iso");
  if (iso !== null && iso !== "" && Number.isFinite(Number(iso))) out.iso = Number(iso);
  const url = q.get("url");
  if (url) out.url = url;
  return out;
}

export class ViewerState {
  readonly container: ContainerInfo;
  readonly camera: OrbitCamera;
  isovalue: number;
  lastStats: FrameStats | null = null;
  showOverlay = true;
  fps = 0;

  private readonly engine: ComputeEngine;
  private readonly opts: ViewerOptions;
  private inFlight = false;
  private pending: number | null = null;

  constructor(container: ContainerInfo, engine: ComputeEngine, opts: ViewerOptions = {}) {
    this.container = container;
    this.engine = engine;
    this.opts = opts;
    this.camera = OrbitCamera.framing(container.dims);
    this.isovalue = (container.range[0] + container.range[1]) / 2;
  }

  /** Parse a container and compute the initial surface at the range
   * midpoint (or the ?iso= preset when given). */
  static async load(buf: ArrayBuffer, engine: ComputeEngine, opts: ViewerOptions = {},
                    presetIso?: number): Promise<ViewerState> {
    const state = new ViewerState(parseContainer(buf), engine, opts);
    await state.setIsovalue(presetIso ?? state.isovalue);
    return state;
  }

  sliderBounds(): [number, number] {
    return this.container.range;
  }

  get triangleCount(): number {
    return this.lastStats ? this.lastStats.vertex_count / 3 : 0;
  }

  overlay(): string[] {
    return this.lastStats ? overlayLines(this.lastStats, this.fps) : ["no surface"];
  }

  /** Request a recompute. Rapid calls coalesce: while one compute is in
   * flight, later values overwrite the single pending slot, so only the
   * latest requested value runs next. */
  async setIsovalue(v: number): Promise<void> {
    this.pending = v;
    if (this.inFlight) return;
    this.inFlight = true;
    try {
      while (this.pending !== null) {
        const next = this.pending;
        this.pending = null;
        try {
          const update = await this.engine.extract(next);
          this.isovalue = next;
          this.lastStats = update.stats;
          this.opts.onSurface?.(update);
        } catch (err) {
          // keep the previous surface; surface the failure to the UI
          this.opts.onError?.(err instanceof Error ? err : new Error(String(err)));
        }
      }
    } finally {
      this.inFlight = false;
    }
  }

  /** Drive a slider sweep through the persistent-cache session interface
   * and record the stats trail the overlay would show. */
  async runSliderSweep(mode: SweepMode, lo: number, hi: number, count: number,
                       seed = 0): Promise<FrameStats[]> {
    const frames = await this.engine.sweep(mode, lo, hi, count, seed);
    if (frames.length) {
      this.lastStats = frames[frames.length - 1];
      this.isovalue = this.lastStats.isovalue;
    }
    return frames;
  }
}
