/** Cross-checks against the core through its command-line interface:
 * the overlay triangle count must equal `bcmc extract`'s count, and a
 * slider sweep over the nested synthetic volume must reach hit rate 1.0. */

import { readFile } from "node:fs/promises";
import { beforeAll, describe, expect, it } from "vitest";

import { parseContainer } from "../src/container.js";
import { CliEngine } from "../src/engine_cli.js";
import { ViewerState } from "../src/state.js";
import { triangleCount, unpackPositions, validatePacked } from "../src/vertices.js";
import { cliExtractStats, makeNestedContainer, makeRandomContainer, tempDir } from "./helpers.js";

let dir: string;
let randomPath: string;
let nestedPath: string;

beforeAll(async () => {
  dir = await tempDir();
  randomPath = await makeRandomContainer(dir, 16, 4);
  nestedPath = await makeNestedContainer(dir, 64, 4);
});

describe("viewer against the real core", () => {
  it("overlay triangle count equals the extract command's count", async () => {
    const buf = await readFile(randomPath);
    const engine = new CliEngine(randomPath);
    const updates: Uint32Array[] = [];
    const state = await ViewerState.load(
      buf.buffer.slice(buf.byteOffset, buf.byteOffset + buf.byteLength),
      engine, { onSurface: (u) => updates.push(u.vertices) }, 0.5);

    const crossCheck = await cliExtractStats(randomPath, 0.5, dir);
    expect(state.lastStats?.vertex_count).toBe(crossCheck.vertex_count);
    expect(state.triangleCount).toBe(crossCheck.vertex_count / 3);
    expect(triangleCount(updates[0])).toBe(state.triangleCount);
    expect(state.overlay().join("\n"))
      .toContain(`triangles ${state.triangleCount.toLocaleString("en-US")}`);
  });

  it("delivers valid packed vertices inside the volume bounds", async () => {
    const engine = new CliEngine(randomPath);
    const { stats, vertices } = await engine.extract(0.4);
    expect(vertices.length).toBe(2 * stats.vertex_count);
    const buf = await readFile(randomPath);
    const info = parseContainer(buf.buffer.slice(buf.byteOffset, buf.byteOffset + buf.byteLength));
    validatePacked(vertices, info.totalBlocks);
    const pos = unpackPositions(vertices, info.nblocks[0], info.nblocks[1]);
    for (let i = 0; i < pos.length; i += 3) {
      expect(pos[i]).toBeGreaterThanOrEqual(0);
      expect(pos[i]).toBeLessThanOrEqual(info.paddedDims[0]);
    }
  });

  it("slider sweep on the nested synthetic reaches hit rate 1.0", async () => {
    const buf = await readFile(nestedPath);
    const engine = new CliEngine(nestedPath);
    const state = await ViewerState.load(
      buf.buffer.slice(buf.byteOffset, buf.byteOffset + buf.byteLength), engine, {}, 16);

    const frames = await state.runSliderSweep("sweep-up", 8, 24, 60);
    expect(frames.length).toBe(59);
    const hits = frames.map((f) => f.hit_rate);
    expect(Math.max(...hits)).toBe(1.0);
    // warm cache: the tail of the sweep hits at least as well as the start
    const head = hits.slice(0, 10).reduce((a, b) => a + b, 0) / 10;
    const tail = hits.slice(-10).reduce((a, b) => a + b, 0) / 10;
    expect(tail).toBeGreaterThanOrEqual(head - 1e-9);
    expect(state.overlay().join("\n")).toContain("hit rate");
  });

  it("empty surfaces flow through without errors", async () => {
    const engine = new CliEngine(randomPath);
    const { stats, vertices } = await engine.extract(5.0);
    expect(stats.vertex_count).toBe(0);
    expect(vertices.length).toBe(0);
  });
});
