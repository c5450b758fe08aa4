/** FrameStats as emitted by the core (one JSON object per frame) and the
 * bench document schema. Overlay text shows these numbers verbatim. */

export interface FrameStats {
  isovalue: number;
  n_active: number;
  n_new: number;
  n_occ: number;
  vertex_count: number;
  hit_rate: number;
  cache_bytes: number;
  grew: boolean;
  pass_ms: Record<string, number>;
}

export interface BenchSummary {
  mean_hit_rate: number | null;
  mean_ms_per_pass: Record<string, number>;
  peak_cache_bytes: number;
}

export interface BenchDoc {
  config: Record<string, unknown>;
  frames: FrameStats[];
  summary: BenchSummary;
}

export function overlayLines(stats: FrameStats, fps?: number): string[] {
  const lines = [
    `isovalue ${stats.isovalue.toPrecision(6)}`,
    `triangles ${(stats.vertex_count / 3).toLocaleString("en-US")}`,
    `hit rate ${(stats.hit_rate * 100).toFixed(1)}%`,
    `active ${stats.n_active}  new ${stats.n_new}  occupied ${stats.n_occ}`,
    `cache ${(stats.cache_bytes / (1024 * 1024)).toFixed(1)} MB${stats.grew ? " (grew)" : ""}`,
    `compute ${(stats.pass_ms["total"] ?? 0).toFixed(1)} ms`,
  ];
  if (fps !== undefined) lines.push(`render ${fps.toFixed(0)} fps`);
  return lines;
}
