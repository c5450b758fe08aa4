import json
import subprocess
import sys

import numpy as np
import pytest

from bcmc.cli import main
from bcmc.container import read_bcmc, write_bcmc
from bcmc.codec import compress_volume
from bcmc.errors import FormatError
from bcmc.synthetic import random_volume


@pytest.fixture(scope="module")
def raw_volume(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "vol.raw"
    rng = np.random.default_rng(0)
    data = rng.random((12, 12, 12)).astype("<f4")
    path.write_bytes(data.tobytes())
    return str(path)


@pytest.fixture(scope="module")
def container(raw_volume, tmp_path_factory):
    out = str(tmp_path_factory.mktemp("data") / "vol.bcmc")
    rc = main(["compress", raw_volume, "--dims", "12,12,12", "--type", "f32",
               "--rate", "4", "-o", out])
    assert rc == 0
    return out


def test_compress_then_info_roundtrips_header(container, capsys):
    assert main(["info", container]) == 0
    out = capsys.readouterr().out
    assert "dims: 12x12x12 (padded 12x12x12)" in out
    assert "rate: 4 bits/voxel" in out
    assert "blocks: 27" in out
    assert "source type: f32" in out


def test_container_binary_roundtrip(tmp_path):
    vol = random_volume((9, 5, 17), 3)
    cv = compress_volume(vol, 8, source_scalar_code=1)
    path = str(tmp_path / "x.bcmc")
    write_bcmc(cv, path)
    back = read_bcmc(path)
    assert back.dims == cv.dims and back.padded_dims == cv.padded_dims
    assert back.rate_bits == 8 and back.source_scalar_code == 1
    assert back.value_range == tuple(np.float32(v) for v in cv.value_range)
    assert (back.ranges.mins == cv.ranges.mins).all()
    assert (back.ranges.maxs == cv.ranges.maxs).all()
    assert back.bitstream == cv.bitstream


def test_info_rejects_truncated_and_bad_magic(tmp_path, container):
    trunc = tmp_path / "trunc.bcmc"
    trunc.write_bytes(open(container, "rb").read()[:40])
    assert main(["info", str(trunc)]) == 1
    bad = tmp_path / "bad.bcmc"
    blob = bytearray(open(container, "rb").read())
    blob[:4] = b"NOPE"
    bad.write_bytes(bytes(blob))
    with pytest.raises(FormatError):
        read_bcmc(str(bad))
    assert main(["info", str(bad)]) == 1


def test_extract_empty_surface_is_valid_ply(container, tmp_path, capsys):
    out = str(tmp_path / "empty.ply")
    assert main(["extract", container, "--isovalue", "-5", "-o", out]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["vertex_count"] == 0
    head = open(out, "rb").read()
    assert head.startswith(b"ply\nformat binary_little_endian 1.0\n")
    assert b"element vertex 0\n" in head and b"element face 0\n" in head


def test_extract_backends_byte_identical(container, tmp_path, capsys):
    outs = {}
    for backend in ("gpu", "cpu"):
        path = str(tmp_path / f"{backend}.ply")
        assert main(["extract", container, "--isovalue", "0.5",
                     "--backend", backend, "-o", path]) == 0
        capsys.readouterr()
        outs[backend] = open(path, "rb").read()
    assert outs["gpu"] == outs["cpu"]
    assert len(outs["gpu"]) > 1000


def test_extract_packed_format_matches_stats(container, tmp_path, capsys):
    out = str(tmp_path / "v.packed")
    assert main(["extract", container, "--isovalue", "0.5",
                 "--format", "packed", "-o", out]) == 0
    stats = json.loads(capsys.readouterr().out)
    packed = np.frombuffer(open(out, "rb").read(), "<u4").reshape(-1, 2)
    assert packed.shape[0] == stats["vertex_count"]
    assert (packed[:, 0] >> 30 == 0).all()


def test_bench_repeated_isovalue_all_hits(container, tmp_path, capsys):
    out = str(tmp_path / "bench.json")
    # degenerate sweep range collapses to one value repeated
    rc = main(["bench", container, "--mode", "sweep-up", "--count", "10",
               "--range", "0.5,0.5000001", "--seed", "3", "-o", out])
    assert rc == 0
    doc = json.load(open(out))
    assert len(doc["frames"]) == 9  # first computation discarded
    assert all(abs(fr["hit_rate"] - 1.0) < 1e-9 for fr in doc["frames"])


def test_bench_json_schema(container, tmp_path, capsys):
    out = str(tmp_path / "bench2.json")
    assert main(["bench", container, "--mode", "random", "--count", "5",
                 "--range", "0.3,0.7", "--seed", "11", "-o", out]) == 0
    doc = json.load(open(out))
    assert set(doc) == {"config", "frames", "summary"}
    assert set(doc["summary"]) == {"mean_hit_rate", "mean_ms_per_pass", "peak_cache_bytes"}
    for fr in doc["frames"]:
        assert {"isovalue", "n_active", "n_new", "n_occ", "vertex_count",
                "hit_rate", "cache_bytes", "grew", "pass_ms"} <= set(fr)


def test_bench_seeded_reproducibility(container, tmp_path):
    docs = []
    for name in ("a.json", "b.json"):
        out = str(tmp_path / name)
        assert main(["bench", container, "--mode", "random", "--count", "8",
                     "--range", "0.2,0.8", "--seed", "42", "-o", out]) == 0
        docs.append(json.load(open(out)))
    isos = [[fr["isovalue"] for fr in d["frames"]] for d in docs]
    counts = [[fr["vertex_count"] for fr in d["frames"]] for d in docs]
    assert isos[0] == isos[1]
    assert counts[0] == counts[1]


def test_bench_rejects_bad_range(container, tmp_path):
    assert main(["bench", container, "--mode", "random", "--count", "5",
                 "--range", "0.7,0.3", "--seed", "1",
                 "-o", str(tmp_path / "x.json")]) == 1


def test_compress_size_mismatch_fails(tmp_path):
    bad = tmp_path / "short.raw"
    bad.write_bytes(b"\x00" * 100)
    assert main(["compress", str(bad), "--dims", "12,12,12", "--type", "u8",
                 "-o", str(tmp_path / "x.bcmc"), "--rate", "2"]) == 1


def test_console_entrypoint_runs():
    proc = subprocess.run([sys.executable, "-m", "bcmc", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "compress" in proc.stdout and "bench" in proc.stdout
