/** WebGPU renderer for the packed triangle soup.
 *
 * Vertices stay in the 8-byte packed format; the vertex stage dequantizes
 * (block origin from the row-major block ID plus 10-bit coordinates over
 * [0, 4]) and the face normal is derived per primitive from the triangle's
 * three vertices read out of the storage buffer, giving flat shading
 * without any expanded attribute data.
 */

import { OrbitCamera } from "./camera.js";

export class CapabilityError extends Error {}

export const SHADER_WGSL = /* wgsl */ `
struct Params {
  mvp: mat4x4f,
  nbx: u32,
  nby: u32,
  vertex_count: u32,
  _pad: u32,
};

@group(0) @binding(0) var<uniform> params: Params;
@group(0) @binding(1) var<storage, read> packed: array<vec2u>;

fn dequantize(v: vec2u) -> vec3f {
  let q = vec3f(
    f32(v.x & 1023u),
    f32((v.x >> 10u) & 1023u),
    f32((v.x >> 20u) & 1023u));
  let b = v.y;
  let origin = vec3f(
    f32(b % params.nbx),
    f32((b / params.nbx) % params.nby),
    f32(b / (params.nbx * params.nby))) * 4.0;
  return origin + q * (4.0 / 1023.0);
}

struct VSOut {
  @builtin(position) position: vec4f,
  @location(0) normal: vec3f,
};

@vertex
fn vs_main(@builtin(vertex_index) vi: u32) -> VSOut {
  let p = dequantize(packed[vi]);
  let base = (vi / 3u) * 3u;
  let a = dequantize(packed[base]);
  let b = dequantize(packed[base + 1u]);
  let c = dequantize(packed[base + 2u]);
  var n = cross(b - a, c - a);
  let len = length(n);
  n = select(vec3f(0.0, 0.0, 1.0), n / len, len > 1e-12);
  var out: VSOut;
  out.position = params.mvp * vec4f(p, 1.0);
  out.normal = n;
  return out;
}

@fragment
fn fs_main(in: VSOut) -> @location(0) vec4f {
  let light = normalize(vec3f(0.4, 0.7, 0.6));
  let shade = 0.25 + 0.75 * abs(dot(in.normal, light));
  return vec4f(shade * vec3f(0.82, 0.85, 0.9), 1.0);
}
`;

export interface RendererInfo {
  nbx: number;
  nby: number;
}

export class SurfaceRenderer {
  private device!: GPUDevice;
  private context!: GPUCanvasContext;
  private pipeline!: GPURenderPipeline;
  private uniforms!: GPUBuffer;
  private depth!: GPUTexture;
  private vertexBuffer: GPUBuffer | null = null;
  private bindGroup: GPUBindGroup | null = null;
  private vertexCount = 0;
  private frames = 0;
  private lastFpsStamp = 0;
  fps = 0;

  constructor(private canvas: HTMLCanvasElement, private info: RendererInfo) {}

  async init(): Promise<void> {
    if (!("gpu" in navigator) || !navigator.gpu) {
      throw new CapabilityError("this browser does not expose the GPU compute API");
    }
    const adapter = await navigator.gpu.requestAdapter();
    if (!adapter) throw new CapabilityError("no GPU adapter available");
    this.device = await adapter.requestDevice();
    this.device.lost.then(() => this.init().catch(() => undefined));

    const format = navigator.gpu.getPreferredCanvasFormat();
    this.context = this.canvas.getContext("webgpu") as GPUCanvasContext;
    this.context.configure({ device: this.device, format, alphaMode: "opaque" });

    const module = this.device.createShaderModule({ code: SHADER_WGSL });
    this.pipeline = this.device.createRenderPipeline({
      layout: "auto",
      vertex: { module, entryPoint: "vs_main" },
      fragment: { module, entryPoint: "fs_main", targets: [{ format }] },
      primitive: { topology: "triangle-list", cullMode: "none" },
      depthStencil: { format: "depth24plus", depthWriteEnabled: true, depthCompare: "less" },
    });
    this.uniforms = this.device.createBuffer({
      size: 80,
      usage: GPUBufferUsage.UNIFORM | GPUBufferUsage.COPY_DST,
    });
    this.makeDepth();
  }

  private makeDepth(): void {
    this.depth = this.device.createTexture({
      size: [this.canvas.width, this.canvas.height],
      format: "depth24plus",
      usage: GPUTextureUsage.RENDER_ATTACHMENT,
    });
  }

  setSurface(packed: Uint32Array): void {
    this.vertexCount = packed.length / 2;
    this.vertexBuffer?.destroy();
    const size = Math.max(packed.byteLength, 8);
    this.vertexBuffer = this.device.createBuffer({
      size,
      usage: GPUBufferUsage.STORAGE | GPUBufferUsage.COPY_DST,
    });
    if (packed.length) this.device.queue.writeBuffer(this.vertexBuffer, 0, packed);
    this.bindGroup = this.device.createBindGroup({
      layout: this.pipeline.getBindGroupLayout(0),
      entries: [
        { binding: 0, resource: { buffer: this.uniforms } },
        { binding: 1, resource: { buffer: this.vertexBuffer } },
      ],
    });
  }

  get trianglesDrawn(): number {
    return this.vertexCount / 3;
  }

  draw(camera: OrbitCamera): void {
    const aspect = this.canvas.width / Math.max(1, this.canvas.height);
    const u = new ArrayBuffer(80);
    new Float32Array(u, 0, 16).set(camera.viewProjection(aspect));
    new Uint32Array(u, 64, 4).set([this.info.nbx, this.info.nby, this.vertexCount, 0]);
    this.device.queue.writeBuffer(this.uniforms, 0, u);

    const encoder = this.device.createCommandEncoder();
    const pass = encoder.beginRenderPass({
      colorAttachments: [{
        view: this.context.getCurrentTexture().createView(),
        clearValue: { r: 0.07, g: 0.08, b: 0.1, a: 1 },
        loadOp: "clear",
        storeOp: "store",
      }],
      depthStencilAttachment: {
        view: this.depth.createView(),
        depthClearValue: 1,
        depthLoadOp: "clear",
        depthStoreOp: "discard",
      },
    });
    if (this.vertexCount && this.bindGroup) {
      pass.setPipeline(this.pipeline);
      pass.setBindGroup(0, this.bindGroup);
      pass.draw(this.vertexCount);
    }
    pass.end();
    this.device.queue.submit([encoder.finish()]);

    this.frames++;
    const now = performance.now();
    if (now - this.lastFpsStamp > 500) {
      this.fps = (this.frames * 1000) / (now - this.lastFpsStamp || 1);
      this.frames = 0;
      this.lastFpsStamp = now;
    }
  }
}
