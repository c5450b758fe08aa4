"""Command-line entry points: compress, extract, bench, info."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import container
from .codec import compress_volume
from .errors import BcmcError, OutOfMemoryError
from .oracles import dequantize
from .pipeline import Pipeline
from .ply import write_ply
from .volume import SCALAR_CODES, load_raw

_SCALAR_NAMES = {v: k for k, v in SCALAR_CODES.items()}


@dataclass
class BenchConfig:
    mode: str
    count: int
    lo: float
    hi: float
    seed: int
    backend: str
    cache_fraction: float
    output: str

    def __post_init__(self):
        if self.mode not in ("random", "sweep-up", "sweep-down"):
            raise BcmcError(f"unknown bench mode {self.mode!r}")
        if not self.lo < self.hi:
            raise BcmcError(f"bench range must satisfy lo < hi, got [{self.lo}, {self.hi}]")
        if self.count < 1:
            raise BcmcError("bench count must be >= 1")

    def isovalues(self) -> np.ndarray:
        if self.mode == "random":
            return np.random.default_rng(self.seed).uniform(self.lo, self.hi, self.count)
        vals = np.linspace(self.lo, self.hi, self.count)
        return vals if self.mode == "sweep-up" else vals[::-1]


def _parse_triple(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise BcmcError(f"expected X,Y,Z, got {text!r}")
    return tuple(int(p) for p in parts)


def cmd_compress(args) -> int:
    dims = _parse_triple(args.dims)
    with open(args.input, "rb") as f:
        raw = f.read()
    vol = load_raw(raw, dims, args.type)
    cv = compress_volume(vol, args.rate, SCALAR_CODES[args.type])
    written = container.write_bcmc(cv, args.output)
    original = len(raw)
    print(f"compressed {args.input} ({original} bytes) -> {args.output} ({written} bytes)")
    print(f"bitstream: {len(cv.bitstream)} bytes at {args.rate} bits/voxel, "
          f"ratio 1/{original / written:.1f}")
    return 0


def _make_pipeline(args) -> Pipeline:
    cv = container.read_bcmc(args.container)
    return Pipeline(cv, args.backend, args.cache_fraction)


def cmd_extract(args) -> int:
    pipe = _make_pipeline(args)
    try:
        res = pipe.compute_surface(args.isovalue)
    except OutOfMemoryError as exc:
        print(json.dumps({"error": str(exc), "isovalue": args.isovalue}), file=sys.stderr)
        return 3
    if args.format == "packed":
        with open(args.output, "wb") as f:
            f.write(np.ascontiguousarray(res.vertices, dtype="<u4").tobytes())
    else:
        soup = dequantize(res.vertices, pipe.cv.grid)
        write_ply(args.output, soup.vertices().astype(np.float32))
    print(json.dumps(res.stats.to_dict()))
    return 0


def cmd_bench(args) -> int:
    lo, hi = (float(x) for x in args.range.split(","))
    cfg = BenchConfig(args.mode, args.count, lo, hi, args.seed, args.backend,
                      args.cache_fraction, args.output)
    pipe = _make_pipeline(args)
    frames = []
    for iso in cfg.isovalues():
        res = pipe.compute_surface(float(iso))
        frames.append(res.stats.to_dict())
    recorded = frames[1:]  # the first computation is warm-up only
    labels = sorted({k for fr in recorded for k in fr["pass_ms"]})
    summary = {
        "mean_hit_rate": (sum(fr["hit_rate"] for fr in recorded) / len(recorded)) if recorded else None,
        "mean_ms_per_pass": {
            lab: sum(fr["pass_ms"].get(lab, 0.0) for fr in recorded) / len(recorded)
            for lab in labels
        } if recorded else {},
        "peak_cache_bytes": max((fr["cache_bytes"] for fr in frames), default=0),
    }
    doc = {"config": cfg.__dict__, "frames": recorded, "summary": summary}
    with open(args.output, "w") as f:
        json.dump(doc, f, indent=1)
    if recorded:
        print(f"{cfg.mode}: {len(recorded)} recorded frames, "
              f"mean hit rate {summary['mean_hit_rate']:.4f}, "
              f"peak cache {summary['peak_cache_bytes']} bytes")
    return 0


def cmd_info(args) -> int:
    cv = container.read_bcmc(args.container)
    nb = cv.grid.nblocks
    print(f"dims: {cv.dims[0]}x{cv.dims[1]}x{cv.dims[2]} "
          f"(padded {cv.padded_dims[0]}x{cv.padded_dims[1]}x{cv.padded_dims[2]})")
    print(f"source type: {_SCALAR_NAMES.get(cv.source_scalar_code, '?')}")
    print(f"rate: {cv.rate_bits} bits/voxel")
    print(f"blocks: {cv.grid.total} ({nb[0]}x{nb[1]}x{nb[2]}), {cv.block_bytes} bytes each")
    print(f"global range: [{cv.value_range[0]:g}, {cv.value_range[1]:g}]")
    print(f"bitstream: {len(cv.bitstream)} bytes")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bcmc",
                                description="Isosurfaces from block-compressed volumes")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compress", help="compress a raw volume into a .bcmc container")
    c.add_argument("input")
    c.add_argument("--dims", required=True, help="X,Y,Z voxel counts")
    c.add_argument("--type", required=True, choices=sorted(SCALAR_CODES))
    c.add_argument("--rate", type=int, required=True, help="bits per voxel")
    c.add_argument("-o", "--output", required=True)
    c.set_defaults(func=cmd_compress)

    e = sub.add_parser("extract", help="extract one isosurface to a mesh file")
    e.add_argument("container")
    e.add_argument("--isovalue", type=float, required=True)
    e.add_argument("--backend", choices=("gpu", "cpu"), default="gpu")
    e.add_argument("--cache-fraction", type=float, default=0.10)
    e.add_argument("--format", choices=("ply", "packed"), default="ply")
    e.add_argument("-o", "--output", required=True)
    e.set_defaults(func=cmd_extract)

    b = sub.add_parser("bench", help="run an isovalue benchmark protocol")
    b.add_argument("container")
    b.add_argument("--mode", choices=("random", "sweep-up", "sweep-down"), required=True)
    b.add_argument("--count", type=int, default=100)
    b.add_argument("--range", required=True, help="LO,HI isovalue range")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--backend", choices=("gpu", "cpu"), default="gpu")
    b.add_argument("--cache-fraction", type=float, default=0.10)
    b.add_argument("-o", "--output", required=True)
    b.set_defaults(func=cmd_bench)

    i = sub.add_parser("info", help="print container header fields")
    i.add_argument("container")
    i.set_defaults(func=cmd_info)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (BcmcError, OSError, ValueError) as exc:
        print(f"bcmc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
