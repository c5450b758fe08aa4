"""Minimal compute-device abstraction with two interchangeable executors.

Kernels are registered once by name with two implementations of the same
per-thread program:

  * ``batch``  - executes the whole grid of workgroups as array operations;
    this is the data-parallel engine behind the ``gpu`` backend name.
  * ``group``  - executes a single workgroup; the mirror (``cpu``) backend
    loops workgroups in index order, which serves as the scheduling oracle.

Kernels are written race-free (threads own disjoint output elements, a
single barrier phase separates shared loads from compute), so the two
executors must produce element-wise identical buffers; the test suite
enforces exactly that. Only small control-flow scalars are ever read back
to the host; masks, ID lists, and vertex data stay on the device.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, OutOfMemoryError

_DTYPES = {"u32": np.uint32, "i32": np.int32, "f32": np.float32}

# Block-granularity kernels run one 64-thread workgroup per block.
BLOCK_WG = 64
SCAN_WG = 256


class DeviceBuffer:
    """A fixed-length typed storage buffer. Growth allocates a new buffer."""

    __slots__ = ("data", "kind")

    def __init__(self, data: np.ndarray, kind: str):
        self.data = data
        self.kind = kind

    def __len__(self) -> int:
        return self.data.shape[0]


@dataclass
class KernelDispatch:
    kernel: str
    n_groups: int
    bufs: dict[str, DeviceBuffer]
    consts: dict = field(default_factory=dict)
    label: str | None = None


@dataclass(frozen=True)
class Kernel:
    name: str
    group_size: int
    batch: callable
    group: callable


KERNELS: dict[str, Kernel] = {}


def register_kernel(name: str, group_size: int, batch, group) -> None:
    KERNELS[name] = Kernel(name, group_size, batch, group)


class Device:
    """Owns buffers and executes dispatch sequences in submission order."""

    name = "base"

    def __init__(self, max_bytes: int | None = None):
        self.max_bytes = max_bytes
        self.allocated = 0
        self._times: dict[str, float] = {}

    # -- buffers ------------------------------------------------------------

    def buffer(self, length: int, kind: str, fill=0) -> DeviceBuffer:
        nbytes = int(length) * 4
        if self.max_bytes is not None and self.allocated + nbytes > self.max_bytes:
            raise OutOfMemoryError(f"allocation of {nbytes} bytes exceeds device budget")
        try:
            data = np.full(length, fill, dtype=_DTYPES[kind])
        except MemoryError as exc:
            raise OutOfMemoryError(str(exc)) from exc
        self.allocated += nbytes
        return DeviceBuffer(data, kind)

    def upload(self, arr: np.ndarray, kind: str) -> DeviceBuffer:
        buf = self.buffer(len(arr), kind)
        buf.data[:] = arr
        return buf

    def grow(self, buf: DeviceBuffer, length: int, fill=0) -> DeviceBuffer:
        """Allocate-and-copy growth; the old buffer is dead afterwards."""
        new = self.buffer(length, buf.kind, fill)
        new.data[: len(buf)] = buf.data
        self.allocated -= len(buf) * 4
        return new

    def read_scalars(self, buf: DeviceBuffer, count: int) -> np.ndarray:
        return buf.data[:count].copy()

    # -- execution ----------------------------------------------------------

    def submit(self, dispatches: list[KernelDispatch]) -> None:
        for d in dispatches:
            kern = KERNELS[d.kernel]
            arrays = {k: b.data for k, b in d.bufs.items()}
            t0 = time.perf_counter()
            self._run(kern, arrays, d.consts, d.n_groups)
            dt = time.perf_counter() - t0
            label = d.label or d.kernel
            self._times[label] = self._times.get(label, 0.0) + dt

    def _run(self, kern: Kernel, arrays, consts, n_groups: int) -> None:
        raise NotImplementedError

    # -- timing -------------------------------------------------------------

    def timestamps(self) -> dict[str, float]:
        """Accumulated per-label durations in milliseconds since last reset."""
        return {k: v * 1e3 for k, v in self._times.items()}

    def reset_timestamps(self) -> None:
        self._times = {}


class GpuStyleDevice(Device):
    """Data-parallel executor: every dispatch runs as whole-grid array ops."""

    name = "gpu"

    def _run(self, kern: Kernel, arrays, consts, n_groups: int) -> None:
        if n_groups:
            kern.batch(arrays, consts, n_groups)


class MirrorDevice(Device):
    """Serial oracle executor: workgroups in index order, one at a time."""

    name = "cpu"

    def _run(self, kern: Kernel, arrays, consts, n_groups: int) -> None:
        for g in range(n_groups):
            kern.group(arrays, consts, g)


def make_device(backend: str, max_bytes: int | None = None) -> Device:
    if backend == "gpu":
        return GpuStyleDevice(max_bytes)
    if backend == "cpu":
        return MirrorDevice(max_bytes)
    raise InputError(f"unknown backend {backend!r}")
