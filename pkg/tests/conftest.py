import numpy as np
import pytest

from bcmc.oracles import dequantize, marching_cubes_grid

# half a quantization step (10 bits over a 4-voxel block) plus float slack
COORD_TOL = 0.5 * (4.0 / 1023.0) + 1e-5


def soup_in_pipeline_order(soup, grid, dims):
    """Reorder an oracle soup into the pipeline's emission order.

    The pipeline emits blocks by ascending ID, cells by ascending local
    index (x fastest), triangles in table order; the oracle walks cells in
    global row-major order. Both keep table order within a cell, so sorting
    the oracle by (block, local cell, emission position) aligns the two
    triangle-for-triangle.
    """
    cells = soup.cells
    dx, dy = dims[0], dims[1]
    cx = cells % dx
    cy = (cells // dx) % dy
    cz = cells // (dx * dy)
    nbx, nby, _ = grid.nblocks
    block = (cx // 4) + nbx * ((cy // 4) + nby * (cz // 4))
    local = (cx % 4) + 4 * (cy % 4) + 16 * (cz % 4)
    order = np.lexsort((np.arange(len(cells)), local, block))
    return soup.positions.reshape(-1, 9)[order]


def assert_matches_oracle(result, decoded_vol, grid, isovalue, tol=COORD_TOL):
    """Triangle-count equality plus per-coordinate deviation under
    block+cell-keyed matching against the serial reference."""
    oracle = marching_cubes_grid(decoded_vol, isovalue)
    assert result.vertex_count == 3 * oracle.triangle_count, (
        f"triangle count: pipeline {result.vertex_count // 3}, oracle {oracle.triangle_count}")
    if oracle.triangle_count == 0:
        return
    expected = soup_in_pipeline_order(oracle, grid, decoded_vol.dims)
    got = dequantize(result.vertices, grid).positions.reshape(-1, 9)
    dev = np.abs(expected - got).max()
    assert dev <= tol, f"vertex deviation {dev} > {tol}"


@pytest.fixture(params=["gpu", "cpu"])
def backend(request):
    return request.param
