"""Raw volumes, the 4x4x4 block decomposition, and per-block value ranges.

Conventions used everywhere downstream:
  - flat voxel index = x + dims_x * (y + dims_y * z)   (x fastest)
  - flat block index = bx + nbx * (by + nby * bz)
  - a block's 64 voxels are row-major within the block (local x fastest)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

BLOCK_EDGE = 4
BLOCK_VOXELS = BLOCK_EDGE ** 3

SCALAR_CODES = {"u8": 0, "u16": 1, "f32": 2}
SCALAR_DTYPES = {"u8": "<u1", "u16": "<u2", "f32": "<f4"}


@dataclass
class VolumeF32:
    """A float scalar field padded up to whole 4^3 blocks.

    ``values`` is the padded field, flat row-major; ``value_range`` is the
    (min, max) over the original (unpadded) extent only.
    """

    dims: tuple[int, int, int]
    padded_dims: tuple[int, int, int]
    values: np.ndarray
    value_range: tuple[float, float]

    def as3d(self) -> np.ndarray:
        """Padded field viewed as [z, y, x]."""
        pz, py, px = self.padded_dims[2], self.padded_dims[1], self.padded_dims[0]
        return self.values.reshape(pz, py, px)


@dataclass(frozen=True)
class BlockGrid:
    nblocks: tuple[int, int, int]
    total: int

    @staticmethod
    def for_padded(padded_dims: tuple[int, int, int]) -> "BlockGrid":
        nb = tuple(d // BLOCK_EDGE for d in padded_dims)
        return BlockGrid(nb, nb[0] * nb[1] * nb[2])


@dataclass
class BlockRanges:
    """Per-block min/max of the padded field, indexed by flat block id."""

    mins: np.ndarray
    maxs: np.ndarray


def _pad_up(n: int) -> int:
    return ((n + BLOCK_EDGE - 1) // BLOCK_EDGE) * BLOCK_EDGE


def from_array(data: np.ndarray, dims: tuple[int, int, int]) -> VolumeF32:
    """Build a padded VolumeF32 from an unpadded [z, y, x] float array."""
    dx, dy, dz = dims
    arr = np.asarray(data, dtype=np.float32).reshape(dz, dy, dx)
    padded = tuple(_pad_up(d) for d in dims)
    pads = ((0, padded[2] - dz), (0, padded[1] - dy), (0, padded[0] - dx))
    full = np.pad(arr, pads, mode="edge")
    vmin = float(arr.min())
    vmax = float(arr.max())
    return VolumeF32(dims, padded, np.ascontiguousarray(full).reshape(-1), (vmin, vmax))


def load_raw(raw: bytes, dims: tuple[int, int, int], scalar_type: str) -> VolumeF32:
    """Decode a headerless little-endian voxel array into a padded float volume.

    Integer samples are widened to float without rescaling, so isovalues
    stated against the integer data stay valid.
    """
    if scalar_type not in SCALAR_DTYPES:
        raise InputError(f"unknown scalar type {scalar_type!r}")
    dx, dy, dz = dims
    if dx <= 0 or dy <= 0 or dz <= 0:
        raise InputError(f"invalid dims {dims}")
    dtype = np.dtype(SCALAR_DTYPES[scalar_type])
    expected = dx * dy * dz * dtype.itemsize
    if len(raw) != expected:
        raise InputError(f"raw data is {len(raw)} bytes, expected {expected} for {dims} {scalar_type}")
    flat = np.frombuffer(raw, dtype=dtype)
    if not np.isfinite(flat.astype(np.float64)).all():
        raise InputError("raw float data contains non-finite values")
    return from_array(flat.astype(np.float32).reshape(dz, dy, dx), dims)


def compute_block_ranges(vol: VolumeF32) -> BlockRanges:
    """Exact per-block min/max over the padded field."""
    nbx = vol.padded_dims[0] // BLOCK_EDGE
    nby = vol.padded_dims[1] // BLOCK_EDGE
    nbz = vol.padded_dims[2] // BLOCK_EDGE
    v = vol.as3d().reshape(nbz, BLOCK_EDGE, nby, BLOCK_EDGE, nbx, BLOCK_EDGE)
    mins = v.min(axis=(1, 3, 5)).reshape(-1)
    maxs = v.max(axis=(1, 3, 5)).reshape(-1)
    return BlockRanges(np.ascontiguousarray(mins), np.ascontiguousarray(maxs))


def block_voxels(vol: VolumeF32) -> np.ndarray:
    """All blocks as a (total, 64) array, block-id major, row-major in-block."""
    nbx = vol.padded_dims[0] // BLOCK_EDGE
    nby = vol.padded_dims[1] // BLOCK_EDGE
    nbz = vol.padded_dims[2] // BLOCK_EDGE
    v = vol.as3d().reshape(nbz, BLOCK_EDGE, nby, BLOCK_EDGE, nbx, BLOCK_EDGE)
    # -> [bz, by, bx, lz, ly, lx], then flatten block ids row-major (bx fastest)
    v = v.transpose(0, 2, 4, 1, 3, 5)
    return np.ascontiguousarray(v).reshape(nbz * nby * nbx, BLOCK_VOXELS)


def assemble_volume(blocks: np.ndarray, padded_dims: tuple[int, int, int]) -> np.ndarray:
    """Inverse of block_voxels: (total, 64) -> flat padded row-major field."""
    nbx, nby, nbz = (d // BLOCK_EDGE for d in padded_dims)
    v = blocks.reshape(nbz, nby, nbx, BLOCK_EDGE, BLOCK_EDGE, BLOCK_EDGE)
    v = v.transpose(0, 3, 1, 4, 2, 5)
    return np.ascontiguousarray(v).reshape(-1)


def block_coords(block_id: int, grid: BlockGrid) -> tuple[int, int, int]:
    """Row-major decode of a flat block id."""
    if not 0 <= block_id < grid.total:
        raise InputError(f"block id {block_id} out of range [0, {grid.total})")
    nbx, nby, _ = grid.nblocks
    bx = block_id % nbx
    by = (block_id // nbx) % nby
    bz = block_id // (nbx * nby)
    return (bx, by, bz)


def block_id(coords: tuple[int, int, int], grid: BlockGrid) -> int:
    """Inverse of block_coords."""
    bx, by, bz = coords
    nbx, nby, nbz = grid.nblocks
    if not (0 <= bx < nbx and 0 <= by < nby and 0 <= bz < nbz):
        raise InputError(f"block coords {coords} outside grid {grid.nblocks}")
    return bx + nbx * (by + nby * bz)
