/** Orbit camera and the small amount of matrix math the viewer needs.
 * Matrices are column-major Float32Array(16), vectors are [x, y, z]. */

export interface Orbit {
  azimuth: number;
  elevation: number;
  distance: number;
  target: [number, number, number];
}

export type Vec3 = [number, number, number];

const EPS = 1e-9;

function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

function cross(a: Vec3, b: Vec3): Vec3 {
  return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
}

function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

function normalize(a: Vec3): Vec3 {
  const l = Math.hypot(a[0], a[1], a[2]);
  if (l < EPS) return [0, 0, 1];
  return [a[0] / l, a[1] / l, a[2] / l];
}

export function eyePosition(o: Orbit): Vec3 {
  const ce = Math.cos(o.elevation);
  return [
    o.target[0] + o.distance * ce * Math.sin(o.azimuth),
    o.target[1] + o.distance * Math.sin(o.elevation),
    o.target[2] + o.distance * ce * Math.cos(o.azimuth),
  ];
}

export function lookAt(eye: Vec3, target: Vec3, up: Vec3 = [0, 1, 0]): Float32Array {
  const f = normalize(sub(target, eye));
  const s = normalize(cross(f, up));
  const u = cross(s, f);
  // column-major view matrix
  return new Float32Array([
    s[0], u[0], -f[0], 0,
    s[1], u[1], -f[1], 0,
    s[2], u[2], -f[2], 0,
    -dot(s, eye), -dot(u, eye), dot(f, eye), 1,
  ]);
}

export function perspective(fovY: number, aspect: number, near: number, far: number): Float32Array {
  const t = 1 / Math.tan(fovY / 2);
  const k = far / (near - far);
  return new Float32Array([
    t / aspect, 0, 0, 0,
    0, t, 0, 0,
    0, 0, k, -1,
    0, 0, near * k, 0,
  ]);
}

export function multiply(a: Float32Array, b: Float32Array): Float32Array {
  const out = new Float32Array(16);
  for (let c = 0; c < 4; c++) {
    for (let r = 0; r < 4; r++) {
      let acc = 0;
      for (let k = 0; k < 4; k++) acc += a[k * 4 + r] * b[c * 4 + k];
      out[c * 4 + r] = acc;
    }
  }
  return out;
}

export function transformPoint(m: Float32Array, p: Vec3): [number, number, number, number] {
  const out: [number, number, number, number] = [0, 0, 0, 0];
  for (let r = 0; r < 4; r++) {
    out[r] = m[r] * p[0] + m[4 + r] * p[1] + m[8 + r] * p[2] + m[12 + r];
  }
  return out;
}

export class OrbitCamera {
  orbit: Orbit;

  constructor(orbit: Orbit) {
    if (orbit.distance <= 0) throw new Error("camera distance must be positive");
    this.orbit = orbit;
  }

  static framing(dims: [number, number, number]): OrbitCamera {
    const target: Vec3 = [dims[0] / 2, dims[1] / 2, dims[2] / 2];
    const radius = Math.hypot(...dims) / 2;
    return new OrbitCamera({ azimuth: 0.6, elevation: 0.4, distance: radius * 2.5, target });
  }

  rotate(dAzimuth: number, dElevation: number): void {
    this.orbit.azimuth += dAzimuth;
    const lim = Math.PI / 2 - 1e-3;
    this.orbit.elevation = Math.min(lim, Math.max(-lim, this.orbit.elevation + dElevation));
  }

  zoom(factor: number): void {
    this.orbit.distance = Math.max(1e-3, this.orbit.distance * factor);
  }

  viewProjection(aspect: number): Float32Array {
    const view = lookAt(eyePosition(this.orbit), this.orbit.target);
    const proj = perspective(Math.PI / 4, aspect, 0.1, this.orbit.distance * 100);
    return multiply(proj, view);
  }

  /** Normalized device coordinates of a world point, for picking and tests. */
  projectPoint(p: Vec3, aspect = 1): [number, number] {
    const h = transformPoint(this.viewProjection(aspect), p);
    return [h[0] / h[3], h[1] / h[3]];
  }
}
