"""Data-parallel building blocks: exclusive scan, stream compaction,
ID compaction, and stable descending sort-by-key.

Scans are multi-level (workgroup chunks of 256, recursively scanned chunk
sums, then an add-back pass) so element counts up to millions of blocks
work. The sort is an 8-pass LSD radix sort over 4-bit digits of the
bit-inverted key, which yields a stable descending order; equal keys keep
ascending input position, making eviction order reproducible everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import BLOCK_WG, SCAN_WG, Device, DeviceBuffer, KernelDispatch, register_kernel
from .errors import InputError

RADIX_BITS = 4
RADIX = 1 << RADIX_BITS


@dataclass
class ScanResult:
    offsets: np.ndarray
    total: int


def _groups(n: int, wg: int) -> int:
    return (n + wg - 1) // wg


# --------------------------------------------------------------------------
# kernels
# --------------------------------------------------------------------------


def _fill_batch(a, c, n_groups):
    a["out"][: c["n"]] = c["value"]


def _fill_group(a, c, g):
    lo = g * BLOCK_WG
    a["out"][lo : min(lo + BLOCK_WG, c["n"])] = c["value"]


register_kernel("fill_u32", BLOCK_WG, _fill_batch, _fill_group)


def _fill_index_batch(a, c, n_groups):
    n = c["n"]
    a["out"][:n] = np.arange(n, dtype=a["out"].dtype)


def _fill_index_group(a, c, g):
    lo = g * BLOCK_WG
    hi = min(lo + BLOCK_WG, c["n"])
    a["out"][lo:hi] = np.arange(lo, hi, dtype=a["out"].dtype)


register_kernel("fill_index", BLOCK_WG, _fill_index_batch, _fill_index_group)


def _scan_group_batch(a, c, n_groups):
    n = c["n"]
    inp, out = a["inp"], a["out"]
    padded = np.zeros(n_groups * SCAN_WG, dtype=np.uint32)
    padded[:n] = inp[:n]
    chunks = padded.reshape(n_groups, SCAN_WG)
    inc = np.cumsum(chunks, axis=1, dtype=np.uint32)
    a["sums"][:n_groups] = inc[:, -1]
    exc = inc - chunks
    out[:n] = exc.reshape(-1)[:n]


def _scan_group_group(a, c, g):
    n = c["n"]
    lo = g * SCAN_WG
    hi = min(lo + SCAN_WG, n)
    chunk = a["inp"][lo:hi]
    inc = np.cumsum(chunk, dtype=np.uint32)
    a["sums"][g] = inc[-1] if hi > lo else 0
    a["out"][lo:hi] = inc - chunk


register_kernel("scan_group", SCAN_WG, _scan_group_batch, _scan_group_group)


def _scan_apply_batch(a, c, n_groups):
    n = c["n"]
    offs = np.repeat(a["offsets"][:n_groups], SCAN_WG)[:n]
    a["out"][:n] += offs


def _scan_apply_group(a, c, g):
    lo = g * SCAN_WG
    hi = min(lo + SCAN_WG, c["n"])
    a["out"][lo:hi] += a["offsets"][g]


register_kernel("scan_apply", SCAN_WG, _scan_apply_batch, _scan_apply_group)


def _compact_ids_batch(a, c, n_groups):
    n = c["n"]
    mask = a["mask"][:n] != 0
    a["out"][a["offsets"][:n][mask]] = np.nonzero(mask)[0].astype(np.uint32)


def _compact_ids_group(a, c, g):
    lo = g * SCAN_WG
    hi = min(lo + SCAN_WG, c["n"])
    mask = a["mask"][lo:hi] != 0
    ids = (np.nonzero(mask)[0] + lo).astype(np.uint32)
    a["out"][a["offsets"][lo:hi][mask]] = ids


register_kernel("compact_ids", SCAN_WG, _compact_ids_batch, _compact_ids_group)


def _compact_vals_batch(a, c, n_groups):
    n = c["n"]
    mask = a["mask"][:n] != 0
    a["out"][a["offsets"][:n][mask]] = a["values"][:n][mask]


def _compact_vals_group(a, c, g):
    lo = g * SCAN_WG
    hi = min(lo + SCAN_WG, c["n"])
    mask = a["mask"][lo:hi] != 0
    a["out"][a["offsets"][lo:hi][mask]] = a["values"][lo:hi][mask]


register_kernel("compact_vals", SCAN_WG, _compact_vals_batch, _compact_vals_group)


def _digits(keys: np.ndarray, c) -> np.ndarray:
    k = keys if not c["invert"] else ~keys
    return (k >> np.uint32(c["shift"])) & np.uint32(RADIX - 1)


def _radix_hist_batch(a, c, n_groups):
    n = c["n"]
    d = _digits(a["keys"][:n], c).astype(np.int64)
    g = np.arange(n) // SCAN_WG
    counts = np.bincount(d * n_groups + g, minlength=RADIX * n_groups)
    a["hist"][: RADIX * n_groups] = counts.astype(np.uint32)


def _radix_hist_group(a, c, g):
    lo = g * SCAN_WG
    hi = min(lo + SCAN_WG, c["n"])
    d = _digits(a["keys"][lo:hi], c).astype(np.int64)
    counts = np.bincount(d, minlength=RADIX)
    a["hist"][g + c["n_groups"] * np.arange(RADIX)] = counts.astype(np.uint32)


register_kernel("radix_hist", SCAN_WG, _radix_hist_batch, _radix_hist_group)


def _radix_scatter_batch(a, c, n_groups):
    n = c["n"]
    d = _digits(a["keys"][:n], c)
    padded = np.full(n_groups * SCAN_WG, RADIX, dtype=np.uint32)
    padded[:n] = d
    chunks = padded.reshape(n_groups, SCAN_WG)
    dest = np.empty(n, dtype=np.int64)
    for dig in range(RADIX):
        m = chunks == dig
        rank = np.cumsum(m, axis=1) - m
        sel = m.reshape(-1)[:n]
        base = a["hist_off"][dig * n_groups + np.arange(n_groups)]
        dest_d = (base[:, None] + rank).reshape(-1)[:n]
        dest[sel] = dest_d[sel]
    a["keys_out"][dest] = a["keys"][:n]
    a["vals_out"][dest] = a["vals"][:n]


def _radix_scatter_group(a, c, g):
    lo = g * SCAN_WG
    hi = min(lo + SCAN_WG, c["n"])
    d = _digits(a["keys"][lo:hi], c)
    dest = np.empty(hi - lo, dtype=np.int64)
    for dig in range(RADIX):
        m = d == dig
        cnt = int(m.sum())
        if cnt:
            dest[m] = int(a["hist_off"][dig * c["n_groups"] + g]) + np.arange(cnt)
    a["keys_out"][dest] = a["keys"][lo:hi]
    a["vals_out"][dest] = a["vals"][lo:hi]


register_kernel("radix_scatter", SCAN_WG, _radix_scatter_batch, _radix_scatter_group)


# --------------------------------------------------------------------------
# device-level operations
# --------------------------------------------------------------------------


def scan_device(dev: Device, inp: DeviceBuffer, n: int, label: str = "scan") -> tuple[DeviceBuffer, int]:
    """Exclusive scan of the first n elements; returns (offsets, total)."""
    out = dev.buffer(max(n, 1), "u32")
    if n == 0:
        return out, 0
    g = _groups(n, SCAN_WG)
    sums = dev.buffer(g, "u32")
    dev.submit([KernelDispatch("scan_group", g, {"inp": inp, "out": out, "sums": sums}, {"n": n}, label)])
    if g == 1:
        total = int(dev.read_scalars(sums, 1)[0])
    else:
        sums_off, total = scan_device(dev, sums, g, label)
        dev.submit([KernelDispatch("scan_apply", g, {"out": out, "offsets": sums_off}, {"n": n}, label)])
    return out, total


def compact_ids_device(dev, mask, offsets, n, total, label="compact") -> DeviceBuffer:
    out = dev.buffer(max(total, 1), "u32")
    if n and total:
        g = _groups(n, SCAN_WG)
        dev.submit([KernelDispatch("compact_ids", g, {"mask": mask, "offsets": offsets, "out": out}, {"n": n}, label)])
    return out


def compact_vals_device(dev, mask, offsets, values, n, total, label="compact") -> DeviceBuffer:
    out = dev.buffer(max(total, 1), values.kind)
    if n and total:
        g = _groups(n, SCAN_WG)
        dev.submit([KernelDispatch(
            "compact_vals", g,
            {"mask": mask, "offsets": offsets, "values": values, "out": out}, {"n": n}, label)])
    return out


def sort_by_key_desc_device(dev, keys: DeviceBuffer, vals: DeviceBuffer, n: int,
                            label: str = "sort") -> tuple[DeviceBuffer, DeviceBuffer]:
    """Stable descending sort of (keys, vals); returns the sorted buffers."""
    if len(keys) < n or len(vals) < n:
        raise InputError("sort inputs shorter than n")
    if n == 0:
        return keys, vals
    g = _groups(n, SCAN_WG)
    tk = dev.buffer(n, "u32")
    tv = dev.buffer(n, vals.kind)
    src_k, src_v, dst_k, dst_v = keys, vals, tk, tv
    for p in range(32 // RADIX_BITS):
        consts = {"n": n, "shift": p * RADIX_BITS, "invert": 1, "n_groups": g}
        hist = dev.buffer(RADIX * g, "u32")
        dev.submit([KernelDispatch("radix_hist", g, {"keys": src_k, "hist": hist}, consts, label)])
        hist_off, _ = scan_device(dev, hist, RADIX * g, label)
        dev.submit([KernelDispatch(
            "radix_scatter", g,
            {"keys": src_k, "vals": src_v, "hist_off": hist_off, "keys_out": dst_k, "vals_out": dst_v},
            consts, label)])
        src_k, src_v, dst_k, dst_v = dst_k, dst_v, src_k, src_v
    return src_k, src_v


# --------------------------------------------------------------------------
# array-level convenience wrappers (tests and host-side callers)
# --------------------------------------------------------------------------


def exclusive_scan(values, device: Device | None = None) -> ScanResult:
    values = np.asarray(values, dtype=np.uint32)
    dev = device or _default_device()
    buf = dev.upload(values, "u32")
    out, total = scan_device(dev, buf, len(values))
    return ScanResult(dev.read_scalars(out, len(values)), total)


def stream_compact_ids(mask, device: Device | None = None) -> np.ndarray:
    mask = np.asarray(mask, dtype=np.uint32)
    dev = device or _default_device()
    mbuf = dev.upload(mask, "u32")
    offs, total = scan_device(dev, mbuf, len(mask))
    out = compact_ids_device(dev, mbuf, offs, len(mask), total)
    return dev.read_scalars(out, total)


def stream_compact(mask, values, device: Device | None = None) -> np.ndarray:
    mask = np.asarray(mask, dtype=np.uint32)
    values = np.asarray(values)
    if len(mask) != len(values):
        raise InputError("mask and values must have equal length")
    dev = device or _default_device()
    kind = {np.dtype(np.uint32): "u32", np.dtype(np.int32): "i32", np.dtype(np.float32): "f32"}[values.dtype]
    mbuf = dev.upload(mask, "u32")
    vbuf = dev.upload(values, kind)
    offs, total = scan_device(dev, mbuf, len(mask))
    out = compact_vals_device(dev, mbuf, offs, vbuf, len(mask), total)
    return dev.read_scalars(out, total)


def sort_by_key_desc(keys, values, device: Device | None = None) -> tuple[np.ndarray, np.ndarray]:
    keys = np.asarray(keys, dtype=np.uint32)
    values = np.asarray(values, dtype=np.uint32)
    if len(keys) != len(values):
        raise InputError("keys and values must have equal length")
    dev = device or _default_device()
    kb = dev.upload(keys, "u32")
    vb = dev.upload(values, "u32")
    ks, vs = sort_by_key_desc_device(dev, kb, vb, len(keys))
    return dev.read_scalars(ks, len(keys)), dev.read_scalars(vs, len(values))


def _default_device() -> Device:
    from .backend import GpuStyleDevice

    return GpuStyleDevice()
