"""GPU-driven LRU slot cache for decompressed blocks.

State lives entirely in device buffers: per-slot ages and resident block
IDs, the per-block slot map, and the slot data pool (64 floats per slot).
An update runs the fixed dispatch chain

  age increment -> mark new blocks -> scans -> (early exit / grow)
  -> ID compaction -> age sort -> slot assignment -> decompression

and only the two control scalars (new-block count, available-slot count)
ever cross back to the host. Eviction takes the oldest available slot;
among equal ages the lowest slot index wins, which the stable sort
guarantees, so residency is reproducible across executors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .backend import BLOCK_WG, Device, DeviceBuffer, KernelDispatch, register_kernel
from .codec import CompressedVolume, block_payload_bytes, decode_block, decode_blocks
from .errors import InputError
from .primitives import (
    compact_ids_device,
    compact_vals_device,
    scan_device,
    sort_by_key_desc_device,
)
from .volume import BLOCK_VOXELS, BlockGrid

AGE_MAX = 2 ** 31


# --------------------------------------------------------------------------
# kernels
# --------------------------------------------------------------------------


def _age_inc_batch(a, c, n_groups):
    n = c["n"]
    a["age"][:n] = np.minimum(a["age"][:n] + np.uint32(1), np.uint32(AGE_MAX))
    a["avail"][:n] = (a["sblock"][:n] < 0).astype(np.uint32)


def _age_inc_group(a, c, g):
    lo = g * BLOCK_WG
    hi = min(lo + BLOCK_WG, c["n"])
    a["age"][lo:hi] = np.minimum(a["age"][lo:hi] + np.uint32(1), np.uint32(AGE_MAX))
    a["avail"][lo:hi] = (a["sblock"][lo:hi] < 0).astype(np.uint32)


register_kernel("age_increment", BLOCK_WG, _age_inc_batch, _age_inc_group)


def _mark_new_batch(a, c, n_groups):
    n = c["n"]
    act = a["m_active"][:n] != 0
    slot = a["islot"][:n]
    cached = slot >= 0
    a["m_new"][:n] = (act & ~cached).astype(np.uint32)
    s_busy = slot[act & cached]
    a["age"][s_busy] = 0
    a["avail"][s_busy] = 0
    a["avail"][slot[~act & cached]] = 1


def _mark_new_group(a, c, g):
    lo = g * BLOCK_WG
    hi = min(lo + BLOCK_WG, c["n"])
    act = a["m_active"][lo:hi] != 0
    slot = a["islot"][lo:hi]
    cached = slot >= 0
    a["m_new"][lo:hi] = (act & ~cached).astype(np.uint32)
    s_busy = slot[act & cached]
    a["age"][s_busy] = 0
    a["avail"][s_busy] = 0
    a["avail"][slot[~act & cached]] = 1


register_kernel("mark_new_blocks", BLOCK_WG, _mark_new_batch, _mark_new_group)


def _assign_batch(a, c, n_groups):
    n = c["n"]
    blocks = a["i_new"][:n].astype(np.int64)
    slots = a["i_avail"][:n].astype(np.int64)
    prev = a["sblock"][slots]
    a["islot"][prev[prev >= 0]] = -1
    a["sblock"][slots] = blocks.astype(np.int32)
    a["islot"][blocks] = slots.astype(np.int32)
    a["age"][slots] = 0


def _assign_group(a, c, g):
    lo = g * BLOCK_WG
    hi = min(lo + BLOCK_WG, c["n"])
    blocks = a["i_new"][lo:hi].astype(np.int64)
    slots = a["i_avail"][lo:hi].astype(np.int64)
    prev = a["sblock"][slots]
    a["islot"][prev[prev >= 0]] = -1
    a["sblock"][slots] = blocks.astype(np.int32)
    a["islot"][blocks] = slots.astype(np.int32)
    a["age"][slots] = 0


register_kernel("assign_slots", BLOCK_WG, _assign_batch, _assign_group)


def _decompress_batch(a, c, n_groups):
    n, rate = c["n"], c["rate_bits"]
    ids = a["ids"][:n].astype(np.int64)
    bb = block_payload_bytes(rate)
    stream = a["stream"].view(np.uint8)
    payloads = stream[(ids[:, None] * bb + np.arange(bb)).reshape(-1)].reshape(n, bb)
    slots = a["islot"][ids].astype(np.int64)
    assert (slots >= 0).all(), "decompression target block has no slot"
    vals = decode_blocks(payloads, rate)
    idx = (slots[:, None] * BLOCK_VOXELS + np.arange(BLOCK_VOXELS)).reshape(-1)
    a["pool"][idx] = vals.reshape(-1)


def _decompress_group(a, c, g):
    n, rate = c["n"], c["rate_bits"]
    lo = g * BLOCK_WG
    hi = min(lo + BLOCK_WG, n)
    bb = block_payload_bytes(rate)
    stream = a["stream"].view(np.uint8)
    for t in range(lo, hi):
        b = int(a["ids"][t])
        s = int(a["islot"][b])
        assert s >= 0, "decompression target block has no slot"
        payload = stream[b * bb:(b + 1) * bb].tobytes()
        a["pool"][s * BLOCK_VOXELS:(s + 1) * BLOCK_VOXELS] = decode_block(payload, rate)


register_kernel("decompress_blocks", BLOCK_WG, _decompress_batch, _decompress_group)


# --------------------------------------------------------------------------
# cache object
# --------------------------------------------------------------------------


@dataclass
class UpdateResult:
    n_new: int
    n_active: int
    grew: bool
    hit_rate: float


class BlockCache:
    """Growable slot cache over a block grid, bound to one device.

    ``stream``/``rate_bits`` point at the compressed payloads; tests that
    only exercise residency semantics may omit them, which skips the
    decompression dispatch.
    """

    def __init__(self, device: Device, grid: BlockGrid, initial_fraction: float = 0.10,
                 stream: DeviceBuffer | None = None, rate_bits: int | None = None):
        if not 0.0 < initial_fraction <= 1.0:
            raise InputError(f"initial_fraction must be in (0, 1], got {initial_fraction}")
        self.device = device
        self.grid = grid
        self.stream = stream
        self.rate_bits = rate_bits
        self.slot_count = max(1, math.ceil(initial_fraction * grid.total))
        dev = device
        self.s_age = dev.buffer(self.slot_count, "u32", AGE_MAX)
        self.s_block = dev.buffer(self.slot_count, "i32", -1)
        self.i_slot = dev.buffer(grid.total, "i32", -1)
        self.slot_pool = dev.buffer(self.slot_count * BLOCK_VOXELS, "f32", 0)
        self.m_avail = dev.buffer(self.slot_count, "u32", 0)

    @classmethod
    def for_volume(cls, device: Device, cv: CompressedVolume, initial_fraction: float = 0.10,
                   stream: DeviceBuffer | None = None) -> "BlockCache":
        if stream is None:
            words = np.frombuffer(cv.bitstream, dtype=np.uint8)
            stream = device.upload(np.frombuffer(words.tobytes(), dtype=np.uint32), "u32")
        return cls(device, cv.grid, initial_fraction, stream, cv.rate_bits)

    @property
    def cache_bytes(self) -> int:
        return self.slot_count * BLOCK_VOXELS * 4

    def _grow(self, needed: int) -> None:
        extra = max(needed, math.ceil(self.slot_count / 4))
        new_count = self.slot_count + extra
        dev = self.device
        # allocate everything before mutating state so failure leaves the
        # cache consistent at its pre-growth size
        s_age = dev.grow(self.s_age, new_count, AGE_MAX)
        s_block = dev.grow(self.s_block, new_count, -1)
        m_avail = dev.grow(self.m_avail, new_count, 1)
        slot_pool = dev.grow(self.slot_pool, new_count * BLOCK_VOXELS, 0)
        self.s_age, self.s_block, self.m_avail, self.slot_pool = s_age, s_block, m_avail, slot_pool
        self.slot_count = new_count

    def update(self, m_active: DeviceBuffer, n_active: int | None = None) -> UpdateResult:
        """Make every active block resident, evicting oldest-available slots."""
        dev = self.device
        total = self.grid.total
        if n_active is None:
            _, n_active = scan_device(dev, m_active, total, "cache_scan")

        m_new = dev.buffer(total, "u32")
        dev.submit([
            KernelDispatch("age_increment", _g(self.slot_count),
                           {"age": self.s_age, "sblock": self.s_block, "avail": self.m_avail},
                           {"n": self.slot_count}, "cache_age"),
            KernelDispatch("mark_new_blocks", _g(total),
                           {"m_active": m_active, "islot": self.i_slot, "age": self.s_age,
                            "avail": self.m_avail, "m_new": m_new},
                           {"n": total}, "cache_mark"),
        ])
        o_new, n_new = scan_device(dev, m_new, total, "cache_scan")
        if n_new == 0:
            hit = 1.0 if n_active == 0 else (n_active - n_new) / n_active
            return UpdateResult(0, n_active, False, hit)

        o_avail, n_avail = scan_device(dev, self.m_avail, self.slot_count, "cache_scan")
        grew = False
        if n_new > n_avail:
            self._grow(n_new - n_avail)
            grew = True
            o_avail, n_avail = scan_device(dev, self.m_avail, self.slot_count, "cache_scan")

        i_new = compact_ids_device(dev, m_new, o_new, total, n_new, "cache_compact")
        i_avail = compact_ids_device(dev, self.m_avail, o_avail, self.slot_count, n_avail, "cache_compact")
        k_age = compact_vals_device(dev, self.m_avail, o_avail, self.s_age, self.slot_count, n_avail,
                                    "cache_compact")
        _, i_avail = sort_by_key_desc_device(dev, k_age, i_avail, n_avail, "cache_sort")

        dev.submit([KernelDispatch("assign_slots", _g(n_new),
                                   {"i_new": i_new, "i_avail": i_avail, "age": self.s_age,
                                    "sblock": self.s_block, "islot": self.i_slot},
                                   {"n": n_new}, "cache_assign")])
        if self.stream is not None:
            dev.submit([KernelDispatch("decompress_blocks", _g(n_new),
                                       {"stream": self.stream, "ids": i_new, "islot": self.i_slot,
                                        "pool": self.slot_pool},
                                       {"n": n_new, "rate_bits": self.rate_bits}, "decompress")])
        return UpdateResult(n_new, n_active, grew, (n_active - n_new) / n_active)

    # -- host-side views for tests and stats ---------------------------------

    def residency(self) -> set[int]:
        blocks = self.device.read_scalars(self.s_block, self.slot_count)
        return set(int(b) for b in blocks if b >= 0)

    def snapshot(self) -> dict[str, np.ndarray]:
        return {
            "s_age": self.device.read_scalars(self.s_age, self.slot_count),
            "s_block": self.device.read_scalars(self.s_block, self.slot_count),
            "i_slot": self.device.read_scalars(self.i_slot, self.grid.total),
        }


def _g(n: int) -> int:
    return (n + BLOCK_WG - 1) // BLOCK_WG
