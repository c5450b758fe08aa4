"""The .bcmc container: header, per-block ranges, and the bitstream.

Layout (little-endian, normative for tests):
  magic "BCMC" | u32 version=1 | u64 dims[3] | u64 padded_dims[3]
  | u32 source_scalar_code (0:u8, 1:u16, 2:f32) | u32 rate_bits
  | f32 global_min | f32 global_max
  | f32 mins[total] | f32 maxs[total] | bitstream
"""

from __future__ import annotations

import struct

import numpy as np

from .codec import CompressedVolume, block_payload_bytes
from .errors import FormatError
from .volume import BlockGrid, BlockRanges

MAGIC = b"BCMC"
VERSION = 1
_HEAD = struct.Struct("<4sI3Q3QIIff")


def write_bcmc(cv: CompressedVolume, path: str) -> int:
    """Write the container; returns the byte size written."""
    head = _HEAD.pack(MAGIC, VERSION, *cv.dims, *cv.padded_dims,
                      cv.source_scalar_code, cv.rate_bits, *cv.value_range)
    mins = cv.ranges.mins.astype("<f4").tobytes()
    maxs = cv.ranges.maxs.astype("<f4").tobytes()
    with open(path, "wb") as f:
        f.write(head)
        f.write(mins)
        f.write(maxs)
        f.write(cv.bitstream)
    return len(head) + len(mins) + len(maxs) + len(cv.bitstream)


def header_bytes(grid_total: int) -> int:
    return _HEAD.size + 8 * grid_total


def read_bcmc(path: str) -> CompressedVolume:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _HEAD.size:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, dx, dy, dz, px, py, pz, code, rate, gmin, gmax = _HEAD.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    dims = (int(dx), int(dy), int(dz))
    padded = (int(px), int(py), int(pz))
    if any(p % 4 or p < d or p - d >= 4 or d <= 0 for d, p in zip(dims, padded)):
        raise FormatError(f"{path}: inconsistent dims {dims} / padded {padded}")
    grid = BlockGrid.for_padded(padded)
    need = header_bytes(grid.total) + grid.total * block_payload_bytes(rate)
    if len(raw) != need:
        raise FormatError(f"{path}: size {len(raw)} != expected {need}")
    off = _HEAD.size
    mins = np.frombuffer(raw, "<f4", grid.total, off).copy()
    off += 4 * grid.total
    maxs = np.frombuffer(raw, "<f4", grid.total, off).copy()
    off += 4 * grid.total
    if (mins > maxs).any():
        raise FormatError(f"{path}: corrupt block ranges")
    return CompressedVolume(
        dims=dims, padded_dims=padded, grid=grid, rate_bits=int(rate),
        ranges=BlockRanges(mins, maxs), bitstream=raw[off:],
        value_range=(float(gmin), float(gmax)), source_scalar_code=int(code),
    )
