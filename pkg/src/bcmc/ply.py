"""Binary little-endian PLY output for dequantized triangle soups."""

from __future__ import annotations

import numpy as np


def write_ply(path: str, positions: np.ndarray) -> None:
    """positions: (3*T, 3) float vertices; face i indexes (3i, 3i+1, 3i+2)."""
    verts = np.ascontiguousarray(positions, dtype="<f4").reshape(-1, 3)
    nv = verts.shape[0]
    nf = nv // 3
    header = (
        "ply\n"
        "format binary_little_endian 1.0\n"
        f"element vertex {nv}\n"
        "property float x\nproperty float y\nproperty float z\n"
        f"element face {nf}\n"
        "property list uchar uint vertex_indices\n"
        "end_header\n"
    )
    faces = np.zeros(nf, dtype=np.dtype([("n", "u1"), ("idx", "<u4", 3)]))
    faces["n"] = 3
    faces["idx"] = np.arange(3 * nf, dtype=np.uint32).reshape(-1, 3)
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(verts.tobytes())
        f.write(faces.tobytes())
