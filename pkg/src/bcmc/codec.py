"""Fixed-rate compression of independent 4^3 float blocks.

Every block encodes to exactly 64 * rate_bits bits:

  [9-bit biased common exponent][bit-plane stream ...... zero padding]

The pipeline is: common-exponent block-floating-point conversion to 32-bit
integers, a reversible decorrelating lifting transform along each axis, a
fixed sequency-order permutation of the 64 coefficients, negabinary mapping,
and MSB-first bit-plane coding where each plane carries the known-significant
prefix raw followed by group-test/run bits for the remainder. A biased
exponent of 0 marks an all-zero block, which therefore round-trips exactly.

The stream is self-consistent (our encoder <-> our decoder); compatibility
with any external tool chain is not a goal. Bit i of a payload lives in byte
i >> 3 at position i & 7 (LSB first). Two independent implementations exist
on purpose: the scalar per-block functions are the reference, and the
batched array functions are the fast path used by compression and the
device decompression kernel. Tests pin them bit-exact against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, InputError
from .volume import (
    BLOCK_VOXELS,
    BlockGrid,
    BlockRanges,
    VolumeF32,
    assemble_volume,
    block_voxels,
    compute_block_ranges,
)

EXP_BITS = 9
EXP_BIAS = 150  # frexp exponents reach -148 for f32 denormals; 0 is reserved
NBMASK = 0xAAAAAAAA
INTPREC = 32
RATE_MIN, RATE_MAX = 2, 32

# Sequency order: coefficients sorted by total frequency, ties by linear index.
_lin = np.arange(BLOCK_VOXELS)
PERM = np.lexsort((_lin, (_lin & 3) + ((_lin >> 2) & 3) + (_lin >> 4))).astype(np.int64)
del _lin


def block_payload_bytes(rate_bits: int) -> int:
    return (BLOCK_VOXELS * rate_bits + 7) // 8


def _check_rate(rate_bits: int) -> None:
    if not (isinstance(rate_bits, (int, np.integer)) and RATE_MIN <= rate_bits <= RATE_MAX):
        raise InputError(f"rate_bits must be an integer in [{RATE_MIN}, {RATE_MAX}], got {rate_bits!r}")


# --------------------------------------------------------------------------
# scalar reference codec
# --------------------------------------------------------------------------


class _BitWriter:
    def __init__(self, nbytes: int):
        self.acc = 0
        self.pos = 0
        self.nbytes = nbytes

    def write(self, value: int, nbits: int) -> None:
        if nbits:
            self.acc |= (value & ((1 << nbits) - 1)) << self.pos
            self.pos += nbits

    def put(self, bit: int) -> None:
        if bit:
            self.acc |= 1 << self.pos
        self.pos += 1

    def payload(self) -> bytes:
        return self.acc.to_bytes(self.nbytes, "little")


class _BitReader:
    def __init__(self, payload: bytes):
        self.acc = int.from_bytes(payload, "little")
        self.pos = 0

    def read(self, nbits: int) -> int:
        v = (self.acc >> self.pos) & ((1 << nbits) - 1) if nbits else 0
        self.pos += nbits
        return v

    def get(self) -> int:
        b = (self.acc >> self.pos) & 1
        self.pos += 1
        return b


def _fwd_lift4(v: list[int], base: int, stride: int) -> None:
    x = v[base]
    y = v[base + stride]
    z = v[base + 2 * stride]
    w = v[base + 3 * stride]
    x += w; x >>= 1; w -= x
    z += y; z >>= 1; y -= z
    x += z; x >>= 1; z -= x
    w += y; w >>= 1; y -= w
    w += y >> 1; y -= w >> 1
    v[base] = x
    v[base + stride] = y
    v[base + 2 * stride] = z
    v[base + 3 * stride] = w


def _inv_lift4(v: list[int], base: int, stride: int) -> None:
    x = v[base]
    y = v[base + stride]
    z = v[base + 2 * stride]
    w = v[base + 3 * stride]
    y += w >> 1; w -= y >> 1
    y += w; w <<= 1; w -= y
    z += x; x <<= 1; x -= z
    y += z; z <<= 1; z -= y
    w += x; x <<= 1; x -= w
    v[base] = x
    v[base + stride] = y
    v[base + 2 * stride] = z
    v[base + 3 * stride] = w


def _fwd_xform(v: list[int]) -> None:
    for z in range(4):
        for y in range(4):
            _fwd_lift4(v, 4 * y + 16 * z, 1)
    for x in range(4):
        for z in range(4):
            _fwd_lift4(v, x + 16 * z, 4)
    for y in range(4):
        for x in range(4):
            _fwd_lift4(v, x + 4 * y, 16)


def _inv_xform(v: list[int]) -> None:
    for y in range(4):
        for x in range(4):
            _inv_lift4(v, x + 4 * y, 16)
    for x in range(4):
        for z in range(4):
            _inv_lift4(v, x + 16 * z, 4)
    for z in range(4):
        for y in range(4):
            _inv_lift4(v, 4 * y + 16 * z, 1)


def encode_block(values: np.ndarray, rate_bits: int) -> bytes:
    """Encode 64 row-major floats into exactly 64 * rate_bits payload bits."""
    _check_rate(rate_bits)
    vals = np.asarray(values, dtype=np.float32).reshape(BLOCK_VOXELS)
    if not np.isfinite(vals).all():
        raise InputError("cannot encode non-finite values")
    nbytes = block_payload_bytes(rate_bits)
    maxabs = float(np.max(np.abs(vals)))
    if maxabs == 0.0:
        return bytes(nbytes)

    w = _BitWriter(nbytes)
    e = math.frexp(maxabs)[1]
    w.write(e + EXP_BIAS, EXP_BITS)

    scale = math.ldexp(1.0, 30 - e)
    ints = [int(float(val) * scale) for val in vals]  # trunc toward zero
    _fwd_xform(ints)

    planes = [0] * INTPREC
    for i in range(BLOCK_VOXELS):
        u = (ints[PERM[i]] + NBMASK ^ NBMASK) & 0xFFFFFFFF
        for k in range(INTPREC):
            planes[k] |= ((u >> k) & 1) << i

    bits_left = BLOCK_VOXELS * rate_bits - EXP_BITS
    n = 0
    for k in range(INTPREC - 1, -1, -1):
        if bits_left == 0:
            break
        x = planes[k]
        m = min(n, bits_left)
        w.write(x, m)
        x >>= m
        bits_left -= m
        while n < BLOCK_VOXELS and bits_left > 0:
            bits_left -= 1
            t = 1 if x != 0 else 0
            w.put(t)
            if not t:
                break
            while n < BLOCK_VOXELS - 1 and bits_left > 0:
                bits_left -= 1
                b = x & 1
                w.put(b)
                if b:
                    break
                x >>= 1
                n += 1
            x >>= 1
            n += 1
    return w.payload()


def decode_block(payload: bytes, rate_bits: int) -> np.ndarray:
    """Exact inverse of the coding pipeline; pure function of the payload."""
    _check_rate(rate_bits)
    nbytes = block_payload_bytes(rate_bits)
    if len(payload) != nbytes:
        raise FormatError(f"payload is {len(payload)} bytes, expected {nbytes}")
    r = _BitReader(bytes(payload))
    biased = r.read(EXP_BITS)
    if biased == 0:
        return np.zeros(BLOCK_VOXELS, dtype=np.float32)
    e = biased - EXP_BIAS

    neg = [0] * BLOCK_VOXELS
    bits_left = BLOCK_VOXELS * rate_bits - EXP_BITS
    n = 0
    for k in range(INTPREC - 1, -1, -1):
        if bits_left == 0:
            break
        m = min(n, bits_left)
        x = r.read(m)
        bits_left -= m
        i = 0
        while x:
            if x & 1:
                neg[i] |= 1 << k
            x >>= 1
            i += 1
        while n < BLOCK_VOXELS and bits_left > 0:
            bits_left -= 1
            if not r.get():
                break
            while n < BLOCK_VOXELS - 1 and bits_left > 0:
                bits_left -= 1
                if r.get():
                    break
                n += 1
            # run terminator (read, implied at the last coefficient, or cut
            # off by the bit budget): the coefficient at n becomes significant
            neg[n] |= 1 << k
            n += 1

    ints = [0] * BLOCK_VOXELS
    for i in range(BLOCK_VOXELS):
        u = ((neg[i] ^ NBMASK) - NBMASK) & 0xFFFFFFFF
        ints[PERM[i]] = u - (1 << 32) if u >= 1 << 31 else u
    _inv_xform(ints)

    scale = math.ldexp(1.0, e - 30)
    return np.array([c * scale for c in ints], dtype=np.float64).astype(np.float32)


# --------------------------------------------------------------------------
# batched codec (compression fast path and device decompression kernel)
# --------------------------------------------------------------------------

_DONE, _TEST, _RUN = 0, 1, 2


def _lift_slices(a: np.ndarray, axis: int):
    sl = [slice(None)] * a.ndim
    out = []
    for i in range(4):
        s = list(sl)
        s[axis] = i
        out.append(tuple(s))
    return out

def _fwd_lift_axis(a: np.ndarray, axis: int) -> None:
    s0, s1, s2, s3 = _lift_slices(a, axis)
    x, y, z, w = a[s0].copy(), a[s1].copy(), a[s2].copy(), a[s3].copy()
    x += w; x >>= 1; w -= x
    z += y; z >>= 1; y -= z
    x += z; x >>= 1; z -= x
    w += y; w >>= 1; y -= w
    w += y >> 1; y -= w >> 1
    a[s0], a[s1], a[s2], a[s3] = x, y, z, w


def _inv_lift_axis(a: np.ndarray, axis: int) -> None:
    s0, s1, s2, s3 = _lift_slices(a, axis)
    x, y, z, w = a[s0].copy(), a[s1].copy(), a[s2].copy(), a[s3].copy()
    y += w >> 1; w -= y >> 1
    y += w; w <<= 1; w -= y
    z += x; x <<= 1; x -= z
    y += z; z <<= 1; z -= y
    w += x; x <<= 1; x -= w
    a[s0], a[s1], a[s2], a[s3] = x, y, z, w


def _fwd_xform_batch(ints: np.ndarray) -> np.ndarray:
    a = ints.reshape(-1, 4, 4, 4)  # [B, z, y, x]
    _fwd_lift_axis(a, 3)
    _fwd_lift_axis(a, 2)
    _fwd_lift_axis(a, 1)
    return a.reshape(-1, BLOCK_VOXELS)


def _inv_xform_batch(ints: np.ndarray) -> np.ndarray:
    a = ints.reshape(-1, 4, 4, 4)
    _inv_lift_axis(a, 1)
    _inv_lift_axis(a, 2)
    _inv_lift_axis(a, 3)
    return a.reshape(-1, BLOCK_VOXELS)


def _ragged(lengths: np.ndarray):
    """Row index and within-row offset for ragged per-row spans."""
    total = int(lengths.sum())
    rows = np.repeat(np.arange(lengths.shape[0]), lengths)
    starts = np.concatenate(([0], np.cumsum(lengths)[:-1]))
    offs = np.arange(total) - np.repeat(starts, lengths)
    return rows, offs


def _shr64(x: np.ndarray, s: np.ndarray) -> np.ndarray:
    # uint64 >> 64 is undefined; split the shift so each stage stays < 64
    s1 = np.minimum(s, 32).astype(np.uint64)
    s2 = (np.minimum(s, 64) - s1).astype(np.uint64)
    return (x >> s1) >> s2


def encode_blocks(values: np.ndarray, rate_bits: int) -> np.ndarray:
    """Encode (B, 64) rows of floats to a (B, payload_bytes) uint8 array.

    Bit-exact with encode_block applied per row.
    """
    _check_rate(rate_bits)
    vals = np.ascontiguousarray(values, dtype=np.float32).reshape(-1, BLOCK_VOXELS)
    if not np.isfinite(vals).all():
        raise InputError("cannot encode non-finite values")
    nb, budget = vals.shape[0], BLOCK_VOXELS * rate_bits
    bits = np.zeros((nb, budget), dtype=np.uint8)
    if nb == 0:
        return np.packbits(bits, axis=1, bitorder="little")

    maxabs = np.abs(vals).max(axis=1).astype(np.float64)
    nonzero = maxabs > 0.0
    e = np.frexp(maxabs)[1].astype(np.int64)
    biased = np.where(nonzero, e + EXP_BIAS, 0)
    for k in range(EXP_BITS):
        bits[:, k] = (biased >> k) & 1

    ints = (vals.astype(np.float64) * np.ldexp(1.0, (30 - e))[:, None]).astype(np.int64)
    coeffs = _fwd_xform_batch(ints)
    seq = coeffs[:, PERM]
    neg = ((seq.astype(np.uint64) + NBMASK) ^ NBMASK) & np.uint64(0xFFFFFFFF)

    planes = np.zeros((nb, INTPREC), dtype=np.uint64)
    weights = (np.uint64(1) << np.arange(BLOCK_VOXELS, dtype=np.uint64))
    for k in range(INTPREC):
        planes[:, k] = (((neg >> np.uint64(k)) & np.uint64(1)) * weights).sum(axis=1)

    pos = np.full(nb, EXP_BITS, dtype=np.int64)
    bits_left = np.where(nonzero, budget - EXP_BITS, 0).astype(np.int64)
    n = np.zeros(nb, dtype=np.int64)

    for k in range(INTPREC - 1, -1, -1):
        alive = bits_left > 0
        if not alive.any():
            break
        x = planes[:, k].copy()
        m = np.where(alive, np.minimum(n, bits_left), 0)
        if m.any():
            rows, offs = _ragged(m)
            bits[rows, pos[rows] + offs] = (_shr64(x[rows], offs) & np.uint64(1)).astype(np.uint8)
            x = _shr64(x, m)
            pos += m
            bits_left -= m
        state = np.where(alive & (n < BLOCK_VOXELS) & (bits_left > 0), _TEST, _DONE)
        while True:
            state[(state != _DONE) & ((bits_left <= 0) | (n >= BLOCK_VOXELS))] = _DONE
            act = state != _DONE
            if not act.any():
                break
            is_t = state == _TEST
            bitv = np.where(is_t, (x != 0).astype(np.uint8), (x & np.uint64(1)).astype(np.uint8))
            rows = act.nonzero()[0]
            bits[rows, pos[rows]] = bitv[rows]
            pos[act] += 1
            bits_left[act] -= 1

            one = bitv == 1
            t0 = act & is_t & ~one
            t1_last = act & is_t & one & (n == BLOCK_VOXELS - 1)
            t1 = act & is_t & one & (n < BLOCK_VOXELS - 1)
            run = act & ~is_t
            r1 = run & one
            r0 = run & ~one

            state[t0] = _DONE
            n[t1_last] += 1
            state[t1_last] = _DONE
            state[t1] = _RUN
            adv = r1 | r0
            x[adv] >>= np.uint64(1)
            n[adv] += 1
            state[r1] = _TEST
            r0_last = r0 & (n == BLOCK_VOXELS - 1)
            x[r0_last] >>= np.uint64(1)
            n[r0_last] += 1
            state[r0_last] = _DONE
    return np.packbits(bits, axis=1, bitorder="little")


def decode_blocks(payloads: np.ndarray, rate_bits: int) -> np.ndarray:
    """Decode (B, payload_bytes) uint8 rows to (B, 64) float32 values.

    Bit-exact with decode_block applied per row; this is the device
    decompression kernel's core.
    """
    _check_rate(rate_bits)
    nbytes = block_payload_bytes(rate_bits)
    pl = np.ascontiguousarray(payloads, dtype=np.uint8).reshape(-1, nbytes)
    nb, budget = pl.shape[0], BLOCK_VOXELS * rate_bits
    if nb == 0:
        return np.zeros((0, BLOCK_VOXELS), dtype=np.float32)
    bits = np.unpackbits(pl, axis=1, bitorder="little")

    biased = np.zeros(nb, dtype=np.int64)
    for k in range(EXP_BITS):
        biased |= bits[:, k].astype(np.int64) << k
    nonzero = biased != 0
    e = biased - EXP_BIAS

    neg = np.zeros((nb, BLOCK_VOXELS), dtype=np.uint64)
    pos = np.full(nb, EXP_BITS, dtype=np.int64)
    bits_left = np.where(nonzero, budget - EXP_BITS, 0).astype(np.int64)
    n = np.zeros(nb, dtype=np.int64)

    for k in range(INTPREC - 1, -1, -1):
        alive = bits_left > 0
        if not alive.any():
            break
        kbit = np.uint64(1) << np.uint64(k)
        m = np.where(alive, np.minimum(n, bits_left), 0)
        if m.any():
            rows, offs = _ragged(m)
            set_rows = bits[rows, pos[rows] + offs] != 0
            neg[rows[set_rows], offs[set_rows]] |= kbit
            pos += m
            bits_left -= m
        state = np.where(alive & (n < BLOCK_VOXELS) & (bits_left > 0), _TEST, _DONE)
        while True:
            # a run cut off by the bit budget still marks coefficient n
            starved = (state == _RUN) & (bits_left <= 0)
            if starved.any():
                neg[starved, n[starved]] |= kbit
                n[starved] += 1
                state[starved] = _DONE
            state[(state != _DONE) & ((bits_left <= 0) | (n >= BLOCK_VOXELS))] = _DONE
            act = state != _DONE
            if not act.any():
                break
            rows = act.nonzero()[0]
            bitv = np.zeros(nb, dtype=np.uint8)
            bitv[rows] = bits[rows, pos[rows]]
            pos[act] += 1
            bits_left[act] -= 1

            is_t = state == _TEST
            one = bitv == 1
            t0 = act & is_t & ~one
            t1_last = act & is_t & one & (n == BLOCK_VOXELS - 1)
            t1 = act & is_t & one & (n < BLOCK_VOXELS - 1)
            run = act & ~is_t
            r1 = run & one
            r0 = run & ~one

            state[t0] = _DONE
            sig = t1_last | r1
            if sig.any():
                neg[sig, n[sig]] |= kbit
            n[sig] += 1
            state[t1_last] = _DONE
            state[t1] = _RUN
            state[r1] = _TEST
            n[r0] += 1
            r0_last = r0 & (n == BLOCK_VOXELS - 1)
            if r0_last.any():
                neg[r0_last, n[r0_last]] |= kbit
                n[r0_last] += 1
                state[r0_last] = _DONE

    u = ((neg ^ np.uint64(NBMASK)) - np.uint64(NBMASK)) & np.uint64(0xFFFFFFFF)
    seq = u.astype(np.int64)
    seq[seq >= 1 << 31] -= 1 << 32
    ints = np.zeros_like(seq)
    ints[:, PERM] = seq
    ints = _inv_xform_batch(ints)
    out = (ints.astype(np.float64) * np.ldexp(1.0, (e - 30))[:, None]).astype(np.float32)
    out[~nonzero] = 0.0
    return out


# --------------------------------------------------------------------------
# whole-volume compression
# --------------------------------------------------------------------------


@dataclass
class CompressedVolume:
    """Header fields, per-block value ranges, and the fixed-rate bitstream."""

    dims: tuple[int, int, int]
    padded_dims: tuple[int, int, int]
    grid: BlockGrid
    rate_bits: int
    ranges: BlockRanges
    bitstream: bytes
    value_range: tuple[float, float]
    source_scalar_code: int = 2

    @property
    def block_bytes(self) -> int:
        return block_payload_bytes(self.rate_bits)

    def block_payload(self, block_id: int) -> bytes:
        off = block_id * self.block_bytes
        return self.bitstream[off:off + self.block_bytes]


def compress_volume(vol: VolumeF32, rate_bits: int, source_scalar_code: int = 2) -> CompressedVolume:
    """Encode every padded block; ranges come from the pre-compression voxels."""
    grid = BlockGrid.for_padded(vol.padded_dims)
    payloads = encode_blocks(block_voxels(vol), rate_bits)
    return CompressedVolume(
        dims=vol.dims,
        padded_dims=vol.padded_dims,
        grid=grid,
        rate_bits=rate_bits,
        ranges=compute_block_ranges(vol),
        bitstream=payloads.tobytes(),
        value_range=vol.value_range,
        source_scalar_code=source_scalar_code,
    )


def decompress_volume(cv: CompressedVolume) -> VolumeF32:
    """Decode the full bitstream back into a padded volume (test/oracle path)."""
    payloads = np.frombuffer(cv.bitstream, dtype=np.uint8).reshape(cv.grid.total, cv.block_bytes)
    blocks = decode_blocks(payloads, cv.rate_bits)
    values = assemble_volume(blocks, cv.padded_dims)
    dx, dy, dz = cv.dims
    orig = values.reshape(cv.padded_dims[2], cv.padded_dims[1], cv.padded_dims[0])[:dz, :dy, :dx]
    return VolumeF32(cv.dims, cv.padded_dims, values, (float(orig.min()), float(orig.max())))
