"""Synthetic scalar fields for tests, benchmarks, and demos."""

from __future__ import annotations

import numpy as np

from .volume import VolumeF32, from_array


def radial_field(n: int, descending: bool = True) -> VolumeF32:
    """Cubic field affine in the distance from the center.

    With ``descending`` the value falls off with radius, so ascending
    isovalues give shrinking, nested spheres: an up-sweep then revisits
    already-cached blocks while a down-sweep keeps expanding into fresh
    ones, the cache ordering typical of nested-topology data.
    """
    c = (n - 1) / 2.0
    ax = np.arange(n, dtype=np.float64) - c
    z, y, x = np.meshgrid(ax, ax, ax, indexing="ij")
    dist = np.sqrt(x * x + y * y + z * z)
    vals = (n / 2.0 - dist) if descending else dist
    return from_array(vals.astype(np.float32), (n, n, n))


def sphere_field(n: int) -> VolumeF32:
    """Plain distance-from-center field (isovalue = radius)."""
    return radial_field(n, descending=False)


def random_volume(dims: tuple[int, int, int], seed: int) -> VolumeF32:
    rng = np.random.default_rng(seed)
    return from_array(rng.random((dims[2], dims[1], dims[0]), dtype=np.float32), dims)


def smooth_blocks(count: int, seed: int) -> np.ndarray:
    """(count, 64) smooth 4^3 blocks: affine ramps plus one soft harmonic."""
    rng = np.random.default_rng(seed)
    i, j, k = np.meshgrid(np.arange(4), np.arange(4), np.arange(4), indexing="ij")
    base = rng.normal(0, 1, (count, 1, 1, 1))
    g = rng.normal(0, 0.25, (count, 3, 1, 1, 1))
    amp = rng.normal(0, 0.05, (count, 1, 1, 1))
    phase = rng.uniform(0, 2 * np.pi, (count, 1, 1, 1))
    vals = (base + g[:, 0] * i + g[:, 1] * j + g[:, 2] * k
            + amp * np.sin(0.7 * (i + j + k) + phase))
    return vals.reshape(count, 64).astype(np.float32)
