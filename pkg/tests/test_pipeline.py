import numpy as np

from conftest import assert_matches_oracle
from bcmc.codec import compress_volume, decompress_volume
from bcmc.oracles import marching_cubes_grid
from bcmc.pipeline import Pipeline, load_block_with_neighbors
from bcmc.synthetic import random_volume
from bcmc.volume import block_coords, from_array


def make_pipeline(vol, rate=8, backend="gpu", fraction=0.25):
    cv = compress_volume(vol, rate)
    return Pipeline(cv, backend, fraction), cv


def two_level_volume():
    """Left half ~0.2, right half ~0.8 along x, 8x4x4."""
    v = np.zeros((4, 4, 8), np.float32)
    v[:, :, :4] = 0.2
    v[:, :, 4:] = 0.8
    return from_array(v, (8, 4, 4))


class TestSelectActive:
    def test_constant_volume_nothing_active(self, backend):
        vol = from_array(np.full((8, 8, 8), 5.0, np.float32), (8, 8, 8))
        pipe, _ = make_pipeline(vol, backend=backend)
        assert pipe.select_active_blocks(4.0).n_active == 0
        assert pipe.select_active_blocks(6.0).n_active == 0
        # half-open rule: iso exactly at the constant is not a crossing
        assert pipe.select_active_blocks(5.0).n_active == 0

    def test_union_rule_activates_both_neighbors(self, backend):
        pipe, _ = make_pipeline(two_level_volume(), backend=backend)
        active = pipe.select_active_blocks(0.5)
        assert active.n_active == 2
        ids = pipe.device.read_scalars(active.i_active, 2)
        assert ids.tolist() == [0, 1]

    def test_isovalue_outside_range_empty(self, backend):
        vol = random_volume((12, 12, 12), 4)
        pipe, _ = make_pipeline(vol, backend=backend)
        assert pipe.select_active_blocks(2.0).n_active == 0
        assert pipe.select_active_blocks(-1.0).n_active == 0


def reference_processable(block, m_active, grid, dims):
    """Independent scalar evaluation of the per-cell predicate."""
    nbx, nby, nbz = grid.nblocks
    bx, by, bz = block_coords(block, grid)
    out = np.zeros(64, bool)
    for t in range(64):
        i, j, k = t % 4, (t // 4) % 4, t // 16
        ok = True
        cvec = (int(i == 3), int(j == 3), int(k == 3))
        for ox in range(cvec[0] + 1):
            for oy in range(cvec[1] + 1):
                for oz in range(cvec[2] + 1):
                    if (ox, oy, oz) == (0, 0, 0):
                        continue
                    nx, ny, nz = bx + ox, by + oy, bz + oz
                    if nx >= nbx or ny >= nby or nz >= nbz:
                        ok = False
                    elif not m_active[nx + nbx * (ny + nby * nz)]:
                        ok = False
        if bx * 4 + i + 1 >= dims[0] or by * 4 + j + 1 >= dims[1] or bz * 4 + k + 1 >= dims[2]:
            ok = False
        out[t] = ok
    return out


class TestTileLoading:
    def test_interior_block_fully_processable(self):
        vol = random_volume((12, 12, 12), 1)
        pipe, cv = make_pipeline(vol, fraction=1.0)
        res = pipe.compute_surface(0.5)
        assert res.stats.n_active == cv.grid.total  # noise volume: everything active
        snap_islot = pipe.device.read_scalars(pipe.cache.i_slot, cv.grid.total)
        m_active = np.ones(cv.grid.total, np.uint32)
        pool = pipe.device.read_scalars(pipe.cache.slot_pool, pipe.cache.slot_count * 64)
        tile, proc, ext = load_block_with_neighbors(
            0, m_active, snap_islot, pool, cv.grid, cv.dims)
        assert ext == (5, 5, 5)
        assert proc.all()
        dec = decompress_volume(cv).as3d()
        assert (tile == dec[:5, :5, :5]).all()

    def test_boundary_block_extent_resets(self):
        vol = random_volume((12, 12, 12), 2)
        pipe, cv = make_pipeline(vol, fraction=1.0)
        pipe.compute_surface(0.5)
        islot = pipe.device.read_scalars(pipe.cache.i_slot, cv.grid.total)
        pool = pipe.device.read_scalars(pipe.cache.slot_pool, pipe.cache.slot_count * 64)
        m_active = np.ones(cv.grid.total, np.uint32)
        corner_block = cv.grid.total - 1  # +x, +y, +z grid corner
        tile, proc, ext = load_block_with_neighbors(
            corner_block, m_active, islot, pool, cv.grid, cv.dims)
        assert ext == (4, 4, 4)
        expect = reference_processable(corner_block, m_active, cv.grid, cv.dims)
        assert (proc == expect).all()

    def test_random_activity_patterns_match_reference_predicate(self):
        rng = np.random.default_rng(44)
        vol = random_volume((16, 12, 8), 3)
        pipe, cv = make_pipeline(vol, fraction=1.0)
        pipe.compute_surface(0.5)  # make everything resident
        islot = pipe.device.read_scalars(pipe.cache.i_slot, cv.grid.total)
        pool = pipe.device.read_scalars(pipe.cache.slot_pool, pipe.cache.slot_count * 64)
        for _ in range(25):
            m_active = rng.integers(0, 2, cv.grid.total).astype(np.uint32)
            block = int(rng.integers(0, cv.grid.total))
            m_active[block] = 1
            _, proc, _ = load_block_with_neighbors(block, m_active, islot, pool, cv.grid, cv.dims)
            assert (proc == reference_processable(block, m_active, cv.grid, cv.dims)).all()


class TestOccupancy:
    def test_donor_block_not_occupied(self, backend):
        v = np.zeros((4, 4, 8), np.float32)
        v[:, :, 4:] = 1.0
        pipe, cv = make_pipeline(from_array(v, (8, 4, 4)), backend=backend)
        active = pipe.select_active_blocks(0.5)
        pipe.cache.update(active.m_active, active.n_active)
        occ = pipe.filter_occupied(active, 0.5)
        assert active.n_active == 2
        assert occ.n_occ == 1
        assert pipe.device.read_scalars(occ.i_occ, 1).tolist() == [0]

    def test_occupied_subset_of_active_random(self, backend):
        vol = random_volume((16, 16, 16), 5)
        pipe, cv = make_pipeline(vol, rate=4, backend=backend)
        for iso in (0.3, 0.5, 0.7):
            active = pipe.select_active_blocks(iso)
            pipe.cache.update(active.m_active, active.n_active)
            occ = pipe.filter_occupied(active, iso)
            m_act = pipe.device.read_scalars(active.m_active, cv.grid.total)
            m_occ = pipe.device.read_scalars(occ.m_occ, cv.grid.total)
            assert (m_occ <= m_act).all()

    def test_occupancy_matches_oracle_blocks(self, backend):
        vol = random_volume((16, 16, 16), 6)
        pipe, cv = make_pipeline(vol, rate=8, backend=backend)
        dec = decompress_volume(cv)
        iso = 0.45
        res = pipe.compute_surface(iso)
        soup = marching_cubes_grid(dec, iso)
        cx = soup.cells % 16
        cy = (soup.cells // 16) % 16
        cz = soup.cells // 256
        nbx, nby, _ = cv.grid.nblocks
        oracle_blocks = set(((cx // 4) + nbx * ((cy // 4) + nby * (cz // 4))).tolist())
        active = pipe.select_active_blocks(iso)
        occ = pipe.filter_occupied(active, iso)
        got = set(pipe.device.read_scalars(occ.i_occ, occ.n_occ).tolist())
        assert got == oracle_blocks


class TestVertexOutput:
    def test_all_corners_above_iso_emit_nothing(self, backend):
        vol = from_array(np.full((4, 4, 4), 9.0, np.float32), (4, 4, 4))
        pipe, _ = make_pipeline(vol, backend=backend)
        res = pipe.compute_surface(1.0)
        assert res.vertex_count == 0 and res.stats.n_occ == 0

    def test_single_hot_corner_three_vertices(self, backend):
        v = np.full((4, 4, 4), 0.0, np.float32)
        v[0, 0, 0] = 1.0
        pipe, cv = make_pipeline(from_array(v, (4, 4, 4)), backend=backend)
        res = pipe.compute_surface(0.5)
        assert res.vertex_count == 3
        from bcmc.oracles import dequantize
        verts = dequantize(res.vertices, cv.grid).vertices()
        # rate-8 reconstruction keeps the crossing near each edge midpoint
        step = 4 / 1023
        for vert in verts:
            frac = np.abs(vert - 0.5) < 0.2
            assert frac.sum() == 1, vert  # exactly one fractional coordinate
        expected = {(0.5, 0, 0), (0, 0.5, 0), (0, 0, 0.5)}
        for e in expected:
            dev = np.abs(verts - e).max(axis=1).min()
            assert dev <= 0.5 * step + 0.05  # codec loss + quantization

    def test_end_to_end_matches_oracle_random_volumes(self, backend):
        rng = np.random.default_rng(100)
        for seed in range(3):
            vol = random_volume((16, 16, 16), 200 + seed)
            for rate in (2, 8):
                cv = compress_volume(vol, rate)
                dec = decompress_volume(cv)
                pipe = Pipeline(cv, backend, 0.15)
                for iso in rng.uniform(0.25, 0.75, 2):
                    res = pipe.compute_surface(float(iso))
                    assert_matches_oracle(res, dec, cv.grid, float(iso))

    def test_result_invariants(self, backend):
        vol = random_volume((12, 12, 12), 8)
        pipe, cv = make_pipeline(vol, rate=4, backend=backend)
        res = pipe.compute_surface(0.6)
        assert res.vertex_count % 3 == 0
        assert res.vertices.shape == (res.vertex_count, 2)
        assert (res.vertices[:, 0] >> 30 == 0).all()
        active = pipe.select_active_blocks(0.6)
        occ = pipe.filter_occupied(active, 0.6)
        occupied = set(pipe.device.read_scalars(occ.i_occ, occ.n_occ).tolist())
        assert set(res.vertices[:, 1].tolist()) <= occupied


class TestComputeSurface:
    def test_iso_below_global_min_empty(self, backend):
        vol = random_volume((12, 12, 12), 9)
        pipe, _ = make_pipeline(vol, backend=backend)
        res = pipe.compute_surface(-3.0)
        assert res.vertex_count == 0 and res.stats.n_active == 0
        assert res.stats.hit_rate == 1.0

    def test_same_isovalue_twice_warm_and_identical(self, backend):
        vol = random_volume((16, 16, 16), 10)
        pipe, _ = make_pipeline(vol, rate=4, backend=backend)
        first = pipe.compute_surface(0.5)
        second = pipe.compute_surface(0.5)
        assert second.stats.hit_rate == 1.0
        assert second.stats.n_new == 0
        assert (first.vertices == second.vertices).all()

    def test_result_independent_of_cache_history(self, backend):
        vol = random_volume((16, 16, 16), 11)
        cv = compress_volume(vol, 4)
        cold = Pipeline(cv, backend, 0.1).compute_surface(0.5)
        warm_pipe = Pipeline(cv, backend, 0.1)
        for iso in (0.8, 0.3, 0.65):
            warm_pipe.compute_surface(iso)
        warm = warm_pipe.compute_surface(0.5)
        assert (cold.vertices == warm.vertices).all()

    def test_backends_produce_identical_buffers(self):
        vol = random_volume((16, 16, 16), 12)
        cv = compress_volume(vol, 2)
        a = Pipeline(cv, "gpu", 0.1).compute_surface(0.4)
        b = Pipeline(cv, "cpu", 0.1).compute_surface(0.4)
        assert a.vertex_count == b.vertex_count
        assert (a.vertices == b.vertices).all()

    def test_stats_pass_timings_present(self, backend):
        vol = random_volume((12, 12, 12), 13)
        pipe, _ = make_pipeline(vol, backend=backend)
        res = pipe.compute_surface(0.5)
        for label in ("select_active", "occupancy", "count", "emit", "total"):
            assert label in res.stats.pass_ms
        assert all(v >= 0 for v in res.stats.pass_ms.values())
        assert res.stats.cache_bytes == pipe.cache.slot_count * 256
