import { describe, expect, it } from "vitest";

import { eyePosition, OrbitCamera } from "../src/camera.js";
import { dequantizeVertex } from "../src/vertices.js";

describe("orbit camera", () => {
  it("projects the orbit target to the screen center", () => {
    const cam = new OrbitCamera({ azimuth: 0.7, elevation: 0.3, distance: 50, target: [16, 16, 16] });
    const [nx, ny] = cam.projectPoint([16, 16, 16]);
    expect(nx).toBeCloseTo(0, 6);
    expect(ny).toBeCloseTo(0, 6);
  });

  it("projects the dequantized origin vertex to the volume origin's pixel", () => {
    // vertex at block (0,0,0), q = (0,0,0) is the world-space volume origin
    const p = dequantizeVertex(0, 0, 8, 8);
    expect(p).toEqual([0, 0, 0]);
    const cam = new OrbitCamera({ azimuth: 0.4, elevation: 0.2, distance: 40, target: [0, 0, 0] });
    const [nx, ny] = cam.projectPoint(p);
    expect(Math.hypot(nx, ny)).toBeLessThan(1e-6);
  });

  it("clamps elevation and keeps distance positive", () => {
    const cam = new OrbitCamera({ azimuth: 0, elevation: 0, distance: 10, target: [0, 0, 0] });
    cam.rotate(0, 10);
    expect(cam.orbit.elevation).toBeLessThan(Math.PI / 2);
    cam.zoom(1e-9);
    expect(cam.orbit.distance).toBeGreaterThan(0);
    expect(() => new OrbitCamera({ azimuth: 0, elevation: 0, distance: 0, target: [0, 0, 0] }))
      .toThrow(/distance/);
  });

  it("frames a volume around its center", () => {
    const cam = OrbitCamera.framing([32, 32, 32]);
    expect(cam.orbit.target).toEqual([16, 16, 16]);
    const eye = eyePosition(cam.orbit);
    const d = Math.hypot(eye[0] - 16, eye[1] - 16, eye[2] - 16);
    expect(d).toBeCloseTo(cam.orbit.distance, 6);
  });
});
