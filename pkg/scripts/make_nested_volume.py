#!/usr/bin/env python3
"""Generate the nested synthetic volume (raw f32 + .bcmc container).

The field falls off with distance from the center, so ascending isovalues
give shrinking nested spheres; useful for cache-behavior experiments.
"""

import argparse

from bcmc.codec import compress_volume
from bcmc.container import write_bcmc
from bcmc.synthetic import radial_field


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-n", type=int, default=128, help="cube edge length in voxels")
    ap.add_argument("--rate", type=int, default=4, help="bits per voxel")
    ap.add_argument("--raw", default=None, help="also write the raw f32 field here")
    ap.add_argument("-o", "--output", default="nested.bcmc")
    args = ap.parse_args()

    vol = radial_field(args.n)
    if args.raw:
        with open(args.raw, "wb") as f:
            f.write(vol.as3d()[: args.n, : args.n, : args.n].astype("<f4").tobytes())
        print(f"wrote {args.raw} ({args.n}^3 f32, range {vol.value_range})")
    cv = compress_volume(vol, args.rate)
    size = write_bcmc(cv, args.output)
    print(f"wrote {args.output}: {cv.grid.total} blocks at {args.rate} bits/voxel, {size} bytes")
    print(f"useful isovalue range for sweeps: 8 .. {args.n // 2 - 8}")


if __name__ == "__main__":
    main()
