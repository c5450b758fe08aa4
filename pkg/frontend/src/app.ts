/** Browser entry point: container loading (file picker or ?url=), isovalue
 * slider bounded by the container's global range, orbit controls, and the
 * stats overlay. Honors ?iso= for the initial surface. */

import { CapabilityError, SurfaceRenderer } from "./render.js";
import { HttpEngine } from "./engine_http.js";
import { parseQuery, ViewerState } from "./state.js";
import { validatePacked } from "./vertices.js";

function banner(text: string, fatal = false): void {
  const el = document.getElementById("banner");
  if (!el) return;
  el.textContent = text;
  el.style.display = text ? "block" : "none";
  if (fatal) el.classList.add("fatal");
}

async function startViewer(buf: ArrayBuffer, engineBase: string): Promise<void> {
  const canvas = document.getElementById("view") as HTMLCanvasElement;
  const slider = document.getElementById("iso") as HTMLInputElement;
  const overlay = document.getElementById("overlay") as HTMLElement;
  const query = parseQuery(location.search);

  let renderer: SurfaceRenderer | null = null;
  const engine = new HttpEngine(engineBase);
  const state = await ViewerState.load(buf, engine, {
    onSurface: (update) => {
      validatePacked(update.vertices, state.container.totalBlocks);
      renderer?.setSurface(update.vertices);
    },
    onError: (err) => banner(`compute failed: ${err.message}`),
  }, query.iso);

  renderer = new SurfaceRenderer(canvas, {
    nbx: state.container.nblocks[0],
    nby: state.container.nblocks[1],
  });
  try {
    await renderer.init();
  } catch (err) {
    if (err instanceof CapabilityError) {
      banner(err.message, true);
      return;
    }
    throw err;
  }

  const [lo, hi] = state.sliderBounds();
  slider.min = String(lo);
  slider.max = String(hi);
  slider.step = String((hi - lo) / 1000);
  slider.value = String(state.isovalue);
  slider.addEventListener("input", () => {
    void state.setIsovalue(Number(slider.value));
  });

  let dragging = false;
  canvas.addEventListener("pointerdown", () => { dragging = true; });
  window.addEventListener("pointerup", () => { dragging = false; });
  window.addEventListener("pointermove", (ev) => {
    if (dragging) state.camera.rotate(ev.movementX * 0.01, ev.movementY * 0.01);
  });
  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    state.camera.zoom(ev.deltaY > 0 ? 1.1 : 1 / 1.1);
  });

  const tick = () => {
    state.fps = renderer!.fps;
    overlay.textContent = state.overlay().join("\n");
    renderer!.draw(state.camera);
    requestAnimationFrame(tick);
  };
  requestAnimationFrame(tick);
}

export async function main(): Promise<void> {
  const query = parseQuery(location.search);
  const engineBase = new URLSearchParams(location.search).get("engine") ?? "/api";
  const picker = document.getElementById("file") as HTMLInputElement;

  picker?.addEventListener("change", async () => {
    const file = picker.files?.[0];
    if (!file) return;
    try {
      await startViewer(await file.arrayBuffer(), engineBase);
    } catch (err) {
      banner(`failed to load container: ${(err as Error).message}`, true);
    }
  });

  if (query.url) {
    try {
      const res = await fetch(query.url);
      if (!res.ok) throw new Error(`${res.status} ${res.statusText}`);
      await startViewer(await res.arrayBuffer(), engineBase);
    } catch (err) {
      banner(`failed to fetch ${query.url}: ${(err as Error).message}`, true);
    }
  }
}

if (typeof document !== "undefined" && document.getElementById("view")) {
  void main();
}
