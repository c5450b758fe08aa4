"""Independent single-threaded ground-truth implementations for tests.

Nothing here shares kernel code with the device pipeline; only the constant
Marching Cubes tables are common, so agreement between the two is evidence
rather than tautology. ``serial_marching_cubes`` is the plain triple-loop
reference; ``marching_cubes_grid`` computes the identical soup with array
operations and is pinned against the scalar version by tests so the large
acceptance sweeps stay fast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .mc_tables import CORNER_OFFSETS, EDGE_CORNERS, TRI_COUNT, TRI_TABLE
from .volume import BLOCK_EDGE, BlockGrid, VolumeF32

AGE_MAX = 2 ** 31


@dataclass
class TriangleSoup:
    """Flat vertex triples, three vertices per triangle, voxel units.

    ``cells`` optionally carries each triangle's dual-cell origin voxel id
    (x + dims_x * (y + dims_y * z)) for keyed matching in tests.
    """

    positions: np.ndarray
    cells: np.ndarray | None = None

    @property
    def triangle_count(self) -> int:
        return len(self.positions) // 9

    def vertices(self) -> np.ndarray:
        return self.positions.reshape(-1, 3)


def serial_marching_cubes(vol: VolumeF32, isovalue: float) -> TriangleSoup:
    """Triple-loop Marching Cubes over every dual cell in the original extent.

    A corner is inside iff its value is strictly above the isovalue; edge
    vertices are linearly interpolated, never quantized.
    """
    dx, dy, dz = vol.dims
    d3 = vol.as3d()
    iso = float(np.float32(isovalue))
    offs = CORNER_OFFSETS
    positions: list[float] = []
    cells: list[int] = []
    for cz in range(dz - 1):
        for cy in range(dy - 1):
            for cx in range(dx - 1):
                corner = [float(d3[cz + offs[k, 2], cy + offs[k, 1], cx + offs[k, 0]]) for k in range(8)]
                case = 0
                for k in range(8):
                    if corner[k] > iso:
                        case |= 1 << k
                ntri = int(TRI_COUNT[case])
                if ntri == 0:
                    continue
                cell_id = cx + dx * (cy + dy * cz)
                for t in range(3 * ntri):
                    e = int(TRI_TABLE[case, t])
                    a, b = int(EDGE_CORNERS[e, 0]), int(EDGE_CORNERS[e, 1])
                    va, vb = corner[a], corner[b]
                    frac = (iso - va) / (vb - va)
                    for ax in range(3):
                        pa = (cx, cy, cz)[ax] + float(offs[a, ax])
                        pb = (cx, cy, cz)[ax] + float(offs[b, ax])
                        positions.append(pa + frac * (pb - pa))
                cells.extend([cell_id] * ntri)
    return TriangleSoup(np.array(positions, dtype=np.float64),
                        np.array(cells, dtype=np.int64))


def marching_cubes_grid(vol: VolumeF32, isovalue: float) -> TriangleSoup:
    """Array-operation twin of serial_marching_cubes (identical output)."""
    dx, dy, dz = vol.dims
    if dx < 2 or dy < 2 or dz < 2:
        return TriangleSoup(np.zeros(0, np.float64), np.zeros(0, np.int64))
    d3 = vol.as3d()[:dz, :dy, :dx].astype(np.float64)
    iso = float(np.float32(isovalue))
    cz, cy, cx = np.meshgrid(np.arange(dz - 1), np.arange(dy - 1), np.arange(dx - 1), indexing="ij")
    corners = np.stack(
        [d3[cz + o[2], cy + o[1], cx + o[0]].reshape(-1) for o in CORNER_OFFSETS], axis=1)
    case = ((corners > iso).astype(np.int64) << np.arange(8)).sum(axis=1)
    ntri = TRI_COUNT[case]
    keep = ntri > 0
    if not keep.any():
        return TriangleSoup(np.zeros(0, np.float64), np.zeros(0, np.int64))
    corners = corners[keep]
    case = case[keep]
    ntri = ntri[keep]
    origin = np.stack([cx.reshape(-1)[keep], cy.reshape(-1)[keep], cz.reshape(-1)[keep]], axis=1)
    cell_ids = origin[:, 0] + dx * (origin[:, 1] + dy * origin[:, 2])

    tri_base = np.concatenate(([0], np.cumsum(ntri)[:-1]))
    total_tris = int(ntri.sum())
    positions = np.zeros((total_tris * 9,), dtype=np.float64)
    cells = np.zeros(total_tris, dtype=np.int64)
    off = CORNER_OFFSETS.astype(np.float64)
    for t in range(5):
        sel = np.nonzero(ntri > t)[0]
        if len(sel) == 0:
            break
        tri_idx = tri_base[sel] + t
        cells[tri_idx] = cell_ids[sel]
        for v in range(3):
            e = TRI_TABLE[case[sel], 3 * t + v]
            a = EDGE_CORNERS[e, 0]
            b = EDGE_CORNERS[e, 1]
            va = corners[sel, a]
            vb = corners[sel, b]
            frac = (iso - va) / (vb - va)
            p = origin[sel] + off[a] + frac[:, None] * (off[b] - off[a])
            base = tri_idx * 9 + 3 * v
            for ax in range(3):
                positions[base + ax] = p[:, ax]
    return TriangleSoup(positions, cells)


def serial_lru_simulate(slot_count: int, active_sequence) -> list[tuple[set[int], int]]:
    """Sequential restatement of the cache update; returns per-step
    (residency set, hit count). Uses the same growth amount and the same
    oldest-age / lowest-slot tie-break as the device cache."""
    ages = [AGE_MAX] * slot_count
    blocks: list = [None] * slot_count
    slot_of: dict = {}
    steps: list[tuple[set, int]] = []
    for active in active_sequence:
        active = set(active)
        ages = [min(a + 1, AGE_MAX) for a in ages]
        avail = [blocks[s] is None for s in range(slot_count)]
        hits = 0
        new = []
        for b in sorted(active):
            if b in slot_of:
                s = slot_of[b]
                ages[s] = 0
                avail[s] = False
                hits += 1
            else:
                new.append(b)
        for b, s in slot_of.items():
            if b not in active:
                avail[s] = True
        if new:
            n_avail = sum(avail)
            if len(new) > n_avail:
                extra = max(len(new) - n_avail, math.ceil(slot_count / 4))
                ages.extend([AGE_MAX] * extra)
                blocks.extend([None] * extra)
                avail.extend([True] * extra)
                slot_count += extra
            order = sorted((s for s in range(slot_count) if avail[s]),
                           key=lambda s: (-ages[s], s))
            for b, s in zip(new, order):
                prev = blocks[s]
                if prev is not None:
                    del slot_of[prev]
                blocks[s] = b
                slot_of[b] = s
                ages[s] = 0
        steps.append((set(slot_of), hits))
    return steps


def dequantize(packed: np.ndarray, grid: BlockGrid) -> TriangleSoup:
    """Unpack 8-byte vertices: block origin plus 10-bit coordinates over [0, 4]."""
    words = np.asarray(packed, dtype=np.uint32).reshape(-1, 2)
    w0 = words[:, 0]
    if (w0 >> 30).any():
        raise FormatError("packed vertex has nonzero top bits")
    block = words[:, 1].astype(np.int64)
    if (block >= grid.total).any():
        raise FormatError("packed vertex references a block outside the grid")
    nbx, nby, _ = grid.nblocks
    q = np.stack([w0 & 1023, (w0 >> 10) & 1023, (w0 >> 20) & 1023], axis=1).astype(np.float64)
    origin = np.stack([block % nbx, (block // nbx) % nby, block // (nbx * nby)], axis=1)
    pos = origin.astype(np.float64) * BLOCK_EDGE + q * (BLOCK_EDGE / 1023.0)
    return TriangleSoup(pos.reshape(-1))
