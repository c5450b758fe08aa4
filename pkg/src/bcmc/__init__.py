"""Isosurface extraction from fixed-rate block-compressed volumes.

The pipeline culls blocks by stored value ranges, keeps decompressed
blocks in a device-resident LRU slot cache, and emits a quantized packed
triangle soup, so volumes far larger than device memory stay interactive.
"""

from .backend import GpuStyleDevice, MirrorDevice, make_device
from .cache import BlockCache, UpdateResult
from .codec import (
    CompressedVolume,
    compress_volume,
    decode_block,
    decode_blocks,
    decompress_volume,
    encode_block,
    encode_blocks,
)
from .container import read_bcmc, write_bcmc
from .errors import BcmcError, FormatError, InputError, OutOfMemoryError
from .oracles import TriangleSoup, dequantize, marching_cubes_grid, serial_lru_simulate, serial_marching_cubes
from .pipeline import ActiveSet, FrameStats, OccupiedSet, Pipeline, SurfaceResult
from .primitives import ScanResult, exclusive_scan, sort_by_key_desc, stream_compact, stream_compact_ids
from .volume import (
    BlockGrid,
    BlockRanges,
    VolumeF32,
    block_coords,
    block_id,
    compute_block_ranges,
    from_array,
    load_raw,
)

__version__ = "0.1.0"
