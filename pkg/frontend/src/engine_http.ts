/** Browser-side compute engine speaking to a local bridge over HTTP.
 *
 * The core runs out-of-process (it is not compiled for the browser), so a
 * deployment pairs this static app with a small bridge exposing:
 *   GET {base}/extract?iso=V          -> packed vertex bytes,
 *                                        stats JSON in `x-bcmc-stats`
 *   GET {base}/sweep?mode=&lo=&hi=&count=&seed= -> bench frames JSON
 */

import { FrameStats } from "./stats.js";
import { ComputeEngine, SurfaceUpdate, SweepMode } from "./state.js";

export class HttpEngine implements ComputeEngine {
  constructor(private base: string) {}

  async extract(isovalue: number): Promise<SurfaceUpdate> {
    const res = await fetch(`${this.base}/extract?iso=${encodeURIComponent(isovalue)}`);
    if (!res.ok) throw new Error(`compute bridge: ${res.status} ${res.statusText}`);
    const header = res.headers.get("x-bcmc-stats");
    if (!header) throw new Error("compute bridge: missing stats header");
    const stats = JSON.parse(header) as FrameStats;
    const bytes = await res.arrayBuffer();
    return { stats, vertices: new Uint32Array(bytes) };
  }

  async sweep(mode: SweepMode, lo: number, hi: number, count: number,
              seed = 0): Promise<FrameStats[]> {
    const url = `${this.base}/sweep?mode=${mode}&lo=${lo}&hi=${hi}&count=${count}&seed=${seed}`;
    const res = await fetch(url);
    if (!res.ok) throw new Error(`compute bridge: ${res.status} ${res.statusText}`);
    return (await res.json()) as FrameStats[];
  }
}
