"""End-to-end surface computation over compressed blocks.

Per frame: range-based active-block selection (26-neighborhood union),
cache update + decompression of newly needed blocks, occupancy filtering,
per-block vertex counting, and packed vertex emission. Workgroup kernels
run one 64-thread group per block, one thread per dual cell; each kernel
loads the block's 5^3 tile (own 4^3 voxels plus +side neighbor faces,
edges, and corner) from the slot pool before computing.

A dual cell at local origin (i, j, k) is processable iff every neighbor
block it reaches into (offsets o in {0,1}^3 \\ 0 with o <= the cell's
boundary-crossing vector) is in-grid and active, and the cell's far corner
stays inside the original (unpadded) extent, so clamp padding never
manufactures geometry. Every crossing cell is owned by exactly one block:
the one containing its origin voxel.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .backend import BLOCK_WG, Device, DeviceBuffer, KernelDispatch, make_device, register_kernel
from .cache import BlockCache
from .codec import CompressedVolume
from .mc_tables import CORNER_OFFSETS, EDGE_CORNERS, TRI_COUNT, TRI_TABLE
from .primitives import compact_ids_device, scan_device
from .volume import BLOCK_EDGE, BLOCK_VOXELS, BlockGrid

# cell t <-> local origin (i, j, k), i fastest; one thread per dual cell
_CELL = np.arange(BLOCK_VOXELS)
_CI = (_CELL % 4).astype(np.int64)
_CJ = ((_CELL // 4) % 4).astype(np.int64)
_CK = (_CELL // 16).astype(np.int64)
_CIF = _CI.astype(np.float32)
_CJF = _CJ.astype(np.float32)
_CKF = _CK.astype(np.float32)

# 5^3 tile voxel -> (neighbor offset index, linear index in source block)
_TILE = np.arange(125)
_TX, _TY, _TZ = _TILE % 5, (_TILE // 5) % 5, _TILE // 25
_TOFF = ((_TX >> 2) + 2 * (_TY >> 2) + 4 * (_TZ >> 2)).astype(np.int64)
_TLIN = ((_TX & 3) + 4 * (_TY & 3) + 16 * (_TZ & 3)).astype(np.int64)

# cell corner -> tile linear index, (64, 8)
_CORNER_TILE = ((_CI[:, None] + CORNER_OFFSETS[None, :, 0])
                + 5 * (_CJ[:, None] + CORNER_OFFSETS[None, :, 1])
                + 25 * (_CK[:, None] + CORNER_OFFSETS[None, :, 2])).astype(np.int64)

# neighbor offset index o = ox + 2*oy + 4*oz; cumulative-AND lookup per cell
_OX8 = (np.arange(8) & 1).astype(np.int64)
_OY8 = ((np.arange(8) >> 1) & 1).astype(np.int64)
_OZ8 = ((np.arange(8) >> 2) & 1).astype(np.int64)
_CREQ = ((_CI == 3) + 2 * (_CJ == 3) + 4 * (_CK == 3)).astype(np.int64)

_BITS8 = np.arange(8, dtype=np.int64)
_SLOT15 = np.arange(15, dtype=np.int64)
_EDGE_A = EDGE_CORNERS[:, 0].astype(np.int64)
_EDGE_B = EDGE_CORNERS[:, 1].astype(np.int64)
_OFFX = CORNER_OFFSETS[:, 0].astype(np.float32)
_OFFY = CORNER_OFFSETS[:, 1].astype(np.float32)
_OFFZ = CORNER_OFFSETS[:, 2].astype(np.float32)
_QSCALE = np.float32(1023.0 / BLOCK_EDGE)
_HALF = np.float32(0.5)


# --------------------------------------------------------------------------
# active-block selection
# --------------------------------------------------------------------------


def _axis_min3(v: np.ndarray, axis: int) -> np.ndarray:
    pads = [(0, 0)] * 3
    pads[axis] = (1, 1)
    p = np.pad(v, pads, mode="edge")
    lo = [slice(None)] * 3
    mid = [slice(None)] * 3
    hi = [slice(None)] * 3
    lo[axis], mid[axis], hi[axis] = slice(0, -2), slice(1, -1), slice(2, None)
    return np.minimum(np.minimum(p[tuple(lo)], p[tuple(mid)]), p[tuple(hi)])


def _axis_max3(v: np.ndarray, axis: int) -> np.ndarray:
    pads = [(0, 0)] * 3
    pads[axis] = (1, 1)
    p = np.pad(v, pads, mode="edge")
    lo = [slice(None)] * 3
    mid = [slice(None)] * 3
    hi = [slice(None)] * 3
    lo[axis], mid[axis], hi[axis] = slice(0, -2), slice(1, -1), slice(2, None)
    return np.maximum(np.maximum(p[tuple(lo)], p[tuple(mid)]), p[tuple(hi)])


def _select_batch(a, c, n_groups):
    total = c["n"]
    iso = np.float32(c["iso"])
    shape = (c["nbz"], c["nby"], c["nbx"])
    mn = a["mins"][:total].reshape(shape)
    mx = a["maxs"][:total].reshape(shape)
    for ax in range(3):
        mn = _axis_min3(mn, ax)
        mx = _axis_max3(mx, ax)
    act = (mn <= iso) & (iso < mx)
    a["m_active"][:total] = act.reshape(-1).astype(np.uint32)


def _select_group(a, c, g):
    lo = g * BLOCK_WG
    hi = min(lo + BLOCK_WG, c["n"])
    iso = np.float32(c["iso"])
    nbx, nby, nbz = c["nbx"], c["nby"], c["nbz"]
    b = np.arange(lo, hi, dtype=np.int64)
    bx, by, bz = b % nbx, (b // nbx) % nby, b // (nbx * nby)
    mn = a["mins"][b].copy()
    mx = a["maxs"][b].copy()
    for dz in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                nx = np.clip(bx + dx, 0, nbx - 1)
                ny = np.clip(by + dy, 0, nby - 1)
                nz = np.clip(bz + dz, 0, nbz - 1)
                nid = nx + nbx * (ny + nby * nz)
                mn = np.minimum(mn, a["mins"][nid])
                mx = np.maximum(mx, a["maxs"][nid])
    a["m_active"][lo:hi] = ((mn <= iso) & (iso < mx)).astype(np.uint32)


register_kernel("select_active", BLOCK_WG, _select_batch, _select_group)


# --------------------------------------------------------------------------
# shared-tile loading (one implementation per executor route)
# --------------------------------------------------------------------------


def _tiles_batch(a, c, ids):
    """Gather 5^3 tiles and the processable-cell mask for a list of blocks."""
    nbx, nby, nbz = c["nbx"], c["nby"], c["nbz"]
    n = len(ids)
    bx, by, bz = ids % nbx, (ids // nbx) % nby, ids // (nbx * nby)
    nx = bx[:, None] + _OX8[None, :]
    ny = by[:, None] + _OY8[None, :]
    nz = bz[:, None] + _OZ8[None, :]
    in_grid = (nx < nbx) & (ny < nby) & (nz < nbz)
    nid = np.where(in_grid, nx + nbx * (ny + nby * nz), 0)
    ok = in_grid & (a["m_active"][nid] != 0)
    acc = ok.reshape(n, 2, 2, 2)
    for ax in (1, 2, 3):
        acc = np.logical_and.accumulate(acc, axis=ax)
    proc = acc.reshape(n, 8)[:, _CREQ]
    proc &= (bx[:, None] * 4 + _CI[None, :] + 1 < c["dimx"])
    proc &= (by[:, None] * 4 + _CJ[None, :] + 1 < c["dimy"])
    proc &= (bz[:, None] * 4 + _CK[None, :] + 1 < c["dimz"])

    tile_ok = ok[:, _TOFF]
    slots = a["islot"][nid[:, _TOFF]].astype(np.int64)
    assert (slots[tile_ok] >= 0).all(), "active neighbor not resident"
    src = np.where(tile_ok, slots * BLOCK_VOXELS + _TLIN[None, :], 0)
    tiles = np.where(tile_ok, a["pool"][src], np.float32(0))
    return tiles, proc


def _tiles_group(a, c, b):
    """Single-workgroup version of the tile load (64 threads, one block)."""
    nbx, nby, nbz = c["nbx"], c["nby"], c["nbz"]
    bx, by, bz = b % nbx, (b // nbx) % nby, b // (nbx * nby)
    nx, ny, nz = bx + _OX8, by + _OY8, bz + _OZ8
    in_grid = (nx < nbx) & (ny < nby) & (nz < nbz)
    nid = np.where(in_grid, nx + nbx * (ny + nby * nz), 0)
    ok = in_grid & (a["m_active"][nid] != 0)
    acc = ok.reshape(2, 2, 2)
    for ax in (0, 1, 2):
        acc = np.logical_and.accumulate(acc, axis=ax)
    proc = acc.reshape(8)[_CREQ]
    proc = proc & (bx * 4 + _CI + 1 < c["dimx"]) \
                & (by * 4 + _CJ + 1 < c["dimy"]) \
                & (bz * 4 + _CK + 1 < c["dimz"])

    tile_ok = ok[_TOFF]
    slots = a["islot"][nid[_TOFF]].astype(np.int64)
    assert (slots[tile_ok] >= 0).all(), "active neighbor not resident"
    src = np.where(tile_ok, slots * BLOCK_VOXELS + _TLIN, 0)
    tiles = np.where(tile_ok, a["pool"][src], np.float32(0))
    # barrier: loads complete before any cell is evaluated
    return tiles, proc


def _cell_cases_batch(tiles, proc, iso):
    cv = tiles[:, _CORNER_TILE]
    case = ((cv > iso).astype(np.int64) << _BITS8).sum(axis=2)
    nt = np.where(proc, TRI_COUNT[case], 0)
    return cv, case, nt


def _cell_cases_group(tiles, proc, iso):
    cv = tiles[_CORNER_TILE]
    case = ((cv > iso).astype(np.int64) << _BITS8).sum(axis=1)
    nt = np.where(proc, TRI_COUNT[case], 0)
    return cv, case, nt


# --------------------------------------------------------------------------
# occupancy, counting, emission kernels
# --------------------------------------------------------------------------


def _occupancy_batch(a, c, n_groups):
    n = c["n"]
    ids = a["i_active"][:n].astype(np.int64)
    tiles, proc = _tiles_batch(a, c, ids)
    _, _, nt = _cell_cases_batch(tiles, proc, np.float32(c["iso"]))
    occ = (nt > 0).any(axis=1)
    a["m_occ"][ids[occ]] = 1


def _occupancy_group(a, c, g):
    b = int(a["i_active"][g])
    tiles, proc = _tiles_group(a, c, b)
    _, _, nt = _cell_cases_group(tiles, proc, np.float32(c["iso"]))
    if (nt > 0).any():
        a["m_occ"][b] = 1


register_kernel("occupancy", BLOCK_WG, _occupancy_batch, _occupancy_group)


def _count_batch(a, c, n_groups):
    n = c["n"]
    ids = a["i_occ"][:n].astype(np.int64)
    tiles, proc = _tiles_batch(a, c, ids)
    _, _, nt = _cell_cases_batch(tiles, proc, np.float32(c["iso"]))
    a["counts"][:n] = (3 * nt).sum(axis=1).astype(np.uint32)


def _count_group(a, c, g):
    b = int(a["i_occ"][g])
    tiles, proc = _tiles_group(a, c, b)
    _, _, nt = _cell_cases_group(tiles, proc, np.float32(c["iso"]))
    a["counts"][g] = np.uint32((3 * nt).sum())


register_kernel("count_vertices", BLOCK_WG, _count_batch, _count_group)


def _emit_batch(a, c, n_groups):
    n = c["n"]
    iso = np.float32(c["iso"])
    ids = a["i_occ"][:n].astype(np.int64)
    tiles, proc = _tiles_batch(a, c, ids)
    cv, case, nt = _cell_cases_batch(tiles, proc, iso)
    vcount = 3 * nt
    intra = np.cumsum(vcount, axis=1) - vcount
    base = a["block_offsets"][:n].astype(np.int64)[:, None] + intra  # (n, 64)

    valid = _SLOT15[None, None, :] < vcount[:, :, None]  # (n, 64, 15)
    e = np.where(valid, TRI_TABLE[case][:, :, :15], 0).astype(np.int64)
    ca, cb = _EDGE_A[e], _EDGE_B[e]
    va = np.take_along_axis(cv, ca, axis=2)
    vb = np.take_along_axis(cv, cb, axis=2)
    den = np.where(valid, vb - va, np.float32(1))  # dead lanes never scatter
    frac = (iso - va) / den
    pax = _CIF[None, :, None] + _OFFX[ca]
    pay = _CJF[None, :, None] + _OFFY[ca]
    paz = _CKF[None, :, None] + _OFFZ[ca]
    px = pax + frac * (_CIF[None, :, None] + _OFFX[cb] - pax)
    py = pay + frac * (_CJF[None, :, None] + _OFFY[cb] - pay)
    pz = paz + frac * (_CKF[None, :, None] + _OFFZ[cb] - paz)
    qx = np.clip(np.floor(px * _QSCALE + _HALF), 0, 1023).astype(np.uint32)
    qy = np.clip(np.floor(py * _QSCALE + _HALF), 0, 1023).astype(np.uint32)
    qz = np.clip(np.floor(pz * _QSCALE + _HALF), 0, 1023).astype(np.uint32)
    w0 = qx | (qy << np.uint32(10)) | (qz << np.uint32(20))

    out = (base[:, :, None] + _SLOT15[None, None, :])[valid]
    vb_ = a["vbuf"]
    vb_[2 * out] = w0[valid]
    vb_[2 * out + 1] = np.broadcast_to(ids[:, None, None].astype(np.uint32), valid.shape)[valid]


def _emit_group(a, c, g):
    iso = np.float32(c["iso"])
    b = int(a["i_occ"][g])
    tiles, proc = _tiles_group(a, c, b)
    cv, case, nt = _cell_cases_group(tiles, proc, iso)
    vcount = 3 * nt
    intra = np.cumsum(vcount) - vcount
    base = int(a["block_offsets"][g]) + intra  # (64,)

    valid = _SLOT15[None, :] < vcount[:, None]  # (64, 15)
    e = np.where(valid, TRI_TABLE[case][:, :15], 0).astype(np.int64)
    ca, cb = _EDGE_A[e], _EDGE_B[e]
    va = np.take_along_axis(cv, ca, axis=1)
    vb = np.take_along_axis(cv, cb, axis=1)
    den = np.where(valid, vb - va, np.float32(1))
    frac = (iso - va) / den
    pax = _CIF[:, None] + _OFFX[ca]
    pay = _CJF[:, None] + _OFFY[ca]
    paz = _CKF[:, None] + _OFFZ[ca]
    px = pax + frac * (_CIF[:, None] + _OFFX[cb] - pax)
    py = pay + frac * (_CJF[:, None] + _OFFY[cb] - pay)
    pz = paz + frac * (_CKF[:, None] + _OFFZ[cb] - paz)
    qx = np.clip(np.floor(px * _QSCALE + _HALF), 0, 1023).astype(np.uint32)
    qy = np.clip(np.floor(py * _QSCALE + _HALF), 0, 1023).astype(np.uint32)
    qz = np.clip(np.floor(pz * _QSCALE + _HALF), 0, 1023).astype(np.uint32)
    w0 = qx | (qy << np.uint32(10)) | (qz << np.uint32(20))

    out = (base[:, None] + _SLOT15[None, :])[valid]
    vb_ = a["vbuf"]
    vb_[2 * out] = w0[valid]
    vb_[2 * out + 1] = np.uint32(b)


register_kernel("emit_vertices", BLOCK_WG, _emit_batch, _emit_group)


# --------------------------------------------------------------------------
# host-callable tile loader (contract surface for tests)
# --------------------------------------------------------------------------


def load_block_with_neighbors(block_id: int, m_active: np.ndarray, i_slot: np.ndarray,
                              pool: np.ndarray, grid: BlockGrid, dims: tuple[int, int, int]):
    """Tile + processable mask for one block, as the workgroup kernels see it.

    Returns (tile as [z, y, x] 5^3 array, processable mask per cell, extents).
    """
    arrays = {"m_active": np.asarray(m_active, np.uint32), "islot": np.asarray(i_slot, np.int32),
              "pool": np.asarray(pool, np.float32)}
    nbx, nby, nbz = grid.nblocks
    consts = {"nbx": nbx, "nby": nby, "nbz": nbz,
              "dimx": dims[0], "dimy": dims[1], "dimz": dims[2]}
    tiles, proc = _tiles_group(arrays, consts, int(block_id))
    bx, by, bz = block_id % nbx, (block_id // nbx) % nby, block_id // (nbx * nby)
    ext = tuple(4 + (1 if c + 1 < nb else 0)
                for c, nb in ((bx, nbx), (by, nby), (bz, nbz)))
    return tiles.reshape(5, 5, 5).copy(), proc.copy(), ext


# --------------------------------------------------------------------------
# pipeline
# --------------------------------------------------------------------------


@dataclass
class ActiveSet:
    m_active: DeviceBuffer
    o_active: DeviceBuffer
    i_active: DeviceBuffer
    n_active: int


@dataclass
class OccupiedSet:
    m_occ: DeviceBuffer
    o_occ: DeviceBuffer
    i_occ: DeviceBuffer
    n_occ: int


@dataclass
class FrameStats:
    isovalue: float
    n_active: int
    n_new: int
    n_occ: int
    vertex_count: int
    hit_rate: float
    cache_bytes: int
    grew: bool
    pass_ms: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "isovalue": self.isovalue,
            "n_active": self.n_active,
            "n_new": self.n_new,
            "n_occ": self.n_occ,
            "vertex_count": self.vertex_count,
            "hit_rate": self.hit_rate,
            "cache_bytes": self.cache_bytes,
            "grew": self.grew,
            "pass_ms": {k: round(v, 4) for k, v in self.pass_ms.items()},
        }


@dataclass
class SurfaceResult:
    vertices: np.ndarray  # (vertex_count, 2) uint32, packed triangle soup
    vertex_count: int
    stats: FrameStats


class Pipeline:
    """One compressed volume bound to one device with a persistent cache."""

    def __init__(self, cv: CompressedVolume, device: Device | str = "gpu",
                 cache_fraction: float = 0.10, max_bytes: int | None = None):
        self.cv = cv
        self.device = make_device(device, max_bytes) if isinstance(device, str) else device
        dev = self.device
        self.mins = dev.upload(cv.ranges.mins.astype(np.float32), "f32")
        self.maxs = dev.upload(cv.ranges.maxs.astype(np.float32), "f32")
        self.stream = dev.upload(np.frombuffer(cv.bitstream, dtype=np.uint32), "u32")
        self.cache = BlockCache(dev, cv.grid, cache_fraction, self.stream, cv.rate_bits)
        self.vertex_capacity = 1024
        self.vbuf = dev.buffer(2 * self.vertex_capacity, "u32")
        nbx, nby, nbz = cv.grid.nblocks
        self._consts = {"nbx": nbx, "nby": nby, "nbz": nbz,
                        "dimx": cv.dims[0], "dimy": cv.dims[1], "dimz": cv.dims[2]}

    def _g(self, n: int) -> int:
        return (n + BLOCK_WG - 1) // BLOCK_WG

    def select_active_blocks(self, isovalue: float) -> ActiveSet:
        dev = self.device
        total = self.cv.grid.total
        m = dev.buffer(total, "u32")
        dev.submit([KernelDispatch("select_active", self._g(total),
                                   {"mins": self.mins, "maxs": self.maxs, "m_active": m},
                                   dict(self._consts, iso=float(isovalue), n=total), "select_active")])
        o, n = scan_device(dev, m, total, "offsets")
        i = compact_ids_device(dev, m, o, total, n, "offsets")
        return ActiveSet(m, o, i, n)

    def filter_occupied(self, active: ActiveSet, isovalue: float) -> OccupiedSet:
        dev = self.device
        total = self.cv.grid.total
        m_occ = dev.buffer(total, "u32")
        dev.submit([KernelDispatch("fill_u32", self._g(total), {"out": m_occ},
                                   {"n": total, "value": 0}, "occupancy")])
        if active.n_active:
            dev.submit([KernelDispatch(
                "occupancy", active.n_active,
                {"i_active": active.i_active, "m_active": active.m_active,
                 "islot": self.cache.i_slot, "pool": self.cache.slot_pool, "m_occ": m_occ},
                dict(self._consts, iso=float(isovalue), n=active.n_active), "occupancy")])
        o, n = scan_device(dev, m_occ, total, "offsets")
        i = compact_ids_device(dev, m_occ, o, total, n, "offsets")
        return OccupiedSet(m_occ, o, i, n)

    def count_block_vertices(self, active: ActiveSet, occ: OccupiedSet, isovalue: float):
        dev = self.device
        counts = dev.buffer(max(occ.n_occ, 1), "u32")
        if occ.n_occ:
            dev.submit([KernelDispatch(
                "count_vertices", occ.n_occ,
                {"i_occ": occ.i_occ, "m_active": active.m_active,
                 "islot": self.cache.i_slot, "pool": self.cache.slot_pool, "counts": counts},
                dict(self._consts, iso=float(isovalue), n=occ.n_occ), "count")])
        offsets, total = scan_device(dev, counts, occ.n_occ, "count")
        return counts, offsets, total

    def _ensure_vertex_capacity(self, needed: int) -> None:
        if needed <= self.vertex_capacity:
            return
        cap = max(needed, int(self.vertex_capacity * 3 // 2))
        cap = ((cap + 63) // 64) * 64
        self.vbuf = self.device.grow(self.vbuf, 2 * cap)
        self.vertex_capacity = cap

    def compute_vertices(self, active: ActiveSet, occ: OccupiedSet,
                         offsets: DeviceBuffer, isovalue: float) -> None:
        if not occ.n_occ:
            return
        self.device.submit([KernelDispatch(
            "emit_vertices", occ.n_occ,
            {"i_occ": occ.i_occ, "m_active": active.m_active, "islot": self.cache.i_slot,
             "pool": self.cache.slot_pool, "block_offsets": offsets, "vbuf": self.vbuf},
            dict(self._consts, iso=float(isovalue), n=occ.n_occ), "emit")])

    def compute_surface(self, isovalue: float) -> SurfaceResult:
        dev = self.device
        dev.reset_timestamps()
        t0 = time.perf_counter()
        active = self.select_active_blocks(isovalue)
        upd = self.cache.update(active.m_active, active.n_active)
        occ = self.filter_occupied(active, isovalue)
        _, offsets, n_verts = self.count_block_vertices(active, occ, isovalue)
        self._ensure_vertex_capacity(n_verts)
        self.compute_vertices(active, occ, offsets, isovalue)
        vertices = dev.read_scalars(self.vbuf, 2 * n_verts).reshape(-1, 2)
        pass_ms = dev.timestamps()
        pass_ms["total"] = (time.perf_counter() - t0) * 1e3
        stats = FrameStats(
            isovalue=float(isovalue),
            n_active=active.n_active,
            n_new=upd.n_new,
            n_occ=occ.n_occ,
            vertex_count=n_verts,
            hit_rate=upd.hit_rate,
            cache_bytes=self.cache.cache_bytes,
            grew=upd.grew,
            pass_ms=pass_ms,
        )
        return SurfaceResult(vertices, n_verts, stats)
