#!/usr/bin/env python3
"""Run the random / sweep-up / sweep-down protocols on a container and
print a summary table (first frame of each run is discarded as warm-up)."""

import argparse
import json
import os
import tempfile

from bcmc.cli import main as bcmc_main


def run(container: str, mode: str, lo: float, hi: float, count: int, seed: int,
        fraction: float, backend: str) -> dict:
    out = os.path.join(tempfile.mkdtemp(), f"{mode}.json")
    rc = bcmc_main(["bench", container, "--mode", mode, "--count", str(count),
                    "--range", f"{lo},{hi}", "--seed", str(seed),
                    "--cache-fraction", str(fraction), "--backend", backend, "-o", out])
    if rc != 0:
        raise SystemExit(rc)
    return json.load(open(out))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("container")
    ap.add_argument("--range", required=True, help="LO,HI isovalue range")
    ap.add_argument("--count", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--cache-fraction", type=float, default=0.10)
    ap.add_argument("--backend", choices=("gpu", "cpu"), default="gpu")
    args = ap.parse_args()
    lo, hi = (float(x) for x in args.range.split(","))

    print(f"{'mode':<12}{'hit rate':>10}{'frame ms':>10}{'peak cache':>12}{'tris/frame':>12}")
    for mode in ("random", "sweep-up", "sweep-down"):
        doc = run(args.container, mode, lo, hi, args.count, args.seed,
                  args.cache_fraction, args.backend)
        s = doc["summary"]
        frames = doc["frames"]
        ms = sum(fr["pass_ms"]["total"] for fr in frames) / len(frames)
        tris = sum(fr["vertex_count"] // 3 for fr in frames) / len(frames)
        print(f"{mode:<12}{s['mean_hit_rate']:>10.4f}{ms:>10.1f}"
              f"{s['peak_cache_bytes']:>12}{tris:>12.0f}")


if __name__ == "__main__":
    main()
