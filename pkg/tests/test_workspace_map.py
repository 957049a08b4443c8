"""Reachable-workspace rasters, the inclusion chain, and exports."""

import numpy as np
import pytest
import shapely.geometry

from tetherkit import workspace_map as wm
from tetherkit.environment import Environment
from tetherkit.geometry import Polygon

from conftest import square


@pytest.fixture(scope="module")
def shadow_env():
    return Environment((0, 0), (10, 10), [square(4, 4, 6, 6)])


@pytest.fixture(scope="module")
def empty_env():
    return Environment((0, 0), (10, 10), [])


ANCHOR = np.array([2.0, 5.0])


def test_visibility_map_empty_env(empty_env):
    m = wm.map_visibility(empty_env, ANCHOR, cells=40)
    assert m.grid.all()


def test_visibility_map_shadow(shadow_env):
    m = wm.map_visibility(shadow_env, ANCHOR, cells=80)
    xs, ys = m.centers()
    # deep shadow behind the obstacle is dark, the anchor side is lit
    ix = int(np.searchsorted(xs, 8.5))
    iy = int(np.searchsorted(ys, 5.0))
    assert not m.grid[iy, ix]
    assert m.grid[iy, int(np.searchsorted(xs, 1.0))]
    # independent oracle on random cells: dense sampling along the sight line
    rng = np.random.default_rng(51)
    obstacle = shapely.geometry.Polygon(shadow_env.obstacles[0].vertices)
    for _ in range(200):
        ix = int(rng.integers(0, 80))
        iy = int(rng.integers(0, 80))
        c = np.array([xs[ix], ys[iy]])
        ts = np.linspace(0.0, 1.0, 400)[:, None]
        pts = ANCHOR + ts * (c - ANCHOR)
        blocked = any(
            obstacle.contains(shapely.geometry.Point(p)) for p in pts
        )
        inside = obstacle.contains(shapely.geometry.Point(c))
        want = (not blocked) and (not inside)
        assert bool(m.grid[iy, ix]) == want


def test_visibility_map_rejects_anchor_in_obstacle(shadow_env):
    with pytest.raises(wm.MapError):
        wm.map_visibility(shadow_env, (5, 5), cells=20)


def test_full_free_map_matches_flood_fill(shadow_env):
    import scipy.ndimage

    m = wm.map_full_free(shadow_env, cells=60)
    labels, count = scipy.ndimage.label(m.grid)
    assert count == 1
    # obstacle cells are false
    xs, ys = m.centers()
    assert not m.grid[int(np.searchsorted(ys, 5.0)), int(np.searchsorted(xs, 5.0))]


def test_def8_map_zero_reach_equals_visibility(shadow_env):
    vis = wm.map_visibility(shadow_env, ANCHOR, cells=60, definition=8)
    d8 = wm.map_safe_reach(shadow_env, ANCHOR, 0.0, cells=60)
    assert np.array_equal(vis.grid, d8.grid)


def test_def8_map_monotone_in_reach(shadow_env):
    small = wm.map_safe_reach(shadow_env, ANCHOR, 1.0, cells=60)
    large = wm.map_safe_reach(shadow_env, ANCHOR, 3.0, cells=60)
    assert not (small.grid & ~large.grid).any()
    assert (large.grid & ~small.grid).any()


def test_def8_map_large_reach_fills_free_space(shadow_env):
    d8 = wm.map_safe_reach(shadow_env, ANCHOR, 50.0, cells=60)
    free = wm.map_full_free(shadow_env, cells=60)
    missing = free.grid & ~d8.grid
    band = wm._transition_band(free.grid) | wm._transition_band(d8.grid)
    assert not (missing & ~band).any()


def test_def8_map_against_per_cell_existential_oracle(shadow_env):
    cells = 36
    d_max = 2.0
    d8 = wm.map_safe_reach(shadow_env, ANCHOR, d_max, cells=cells)
    vis = wm.map_visibility(shadow_env, ANCHOR, cells=cells)
    free = wm.map_full_free(shadow_env, cells=cells)
    xs, ys = d8.centers()
    from tetherkit.geometry import segment_clear

    vy, vx = np.nonzero(vis.grid)
    sources = np.stack([xs[vx], ys[vy]], axis=1)
    for iy in range(cells):
        for ix in range(cells):
            if not free.grid[iy, ix]:
                assert not d8.grid[iy, ix]
                continue
            c = np.array([xs[ix], ys[iy]])
            near = sources[np.linalg.norm(sources - c, axis=1) <= d_max]
            want = vis.grid[iy, ix] or any(
                segment_clear((c, s), shadow_env.obstacles, rings=shadow_env.rings)
                for s in near
            )
            got = bool(d8.grid[iy, ix])
            # decimated hop sources may miss, never invent
            assert got <= want
            if want and not got:
                # misses only happen within a cell of the region boundary
                assert wm._transition_band(d8.grid)[iy, ix]


def test_anchor_cell_map(shadow_env):
    m = wm.map_anchor_cell(shadow_env, ANCHOR, cells=50)
    assert m.grid.sum() == 1
    iy, ix = np.argwhere(m.grid)[0]
    xs, ys = m.centers()
    assert abs(xs[ix] - ANCHOR[0]) <= m.cell[0]
    assert abs(ys[iy] - ANCHOR[1]) <= m.cell[1]


def _chain_maps(env, anchor, cells=80, d_max=2.0):
    maps = {}
    for d in (1, 2, 6, 7):
        maps[d] = wm.map_visibility(env, anchor, cells=cells, definition=d)
    for d in (4, 9):
        maps[d] = wm.map_full_free(env, cells=cells, definition=d)
    maps[8] = wm.map_safe_reach(env, anchor, d_max, cells=cells)
    return maps


def test_inclusion_chain_holds(shadow_env):
    report = wm.check_inclusion_chain(_chain_maps(shadow_env, ANCHOR))
    assert report["ok"], report


def test_inclusion_chain_empty_env_all_equal(empty_env):
    maps = _chain_maps(empty_env, ANCHOR)
    report = wm.check_inclusion_chain(maps)
    assert report["ok"]
    for d in (2, 6, 7, 8, 4, 9):
        assert np.array_equal(maps[1].grid, maps[d].grid)


def test_inclusion_chain_reports_corruption(shadow_env):
    maps = _chain_maps(shadow_env, ANCHOR, cells=60)
    grid = maps[4].grid.copy()
    grid[5, 5] = False  # free corner far from every boundary
    maps[4] = wm.NEMap(
        definition=4, origin=maps[4].origin, cell=maps[4].cell, grid=grid, anchor=maps[4].anchor
    )
    report = wm.check_inclusion_chain(maps)
    assert not report["ok"]
    assert [5, 5] in report["equalities"]["4=9"]


def test_inclusion_chain_rejects_grid_mismatch(shadow_env):
    maps = _chain_maps(shadow_env, ANCHOR, cells=40)
    maps[9] = wm.map_full_free(shadow_env, cells=50, definition=9)
    with pytest.raises(wm.MapError):
        wm.check_inclusion_chain(maps)


def test_refinement_keeps_interior_verdicts(shadow_env):
    coarse = wm.map_visibility(shadow_env, ANCHOR, cells=50)
    fine = wm.map_visibility(shadow_env, ANCHOR, cells=100)
    band = wm._transition_band(coarse.grid)
    for iy in range(50):
        for ix in range(50):
            if band[iy, ix]:
                continue
            block = fine.grid[2 * iy : 2 * iy + 2, 2 * ix : 2 * ix + 2]
            assert (block == coarse.grid[iy, ix]).all()


def test_pgm_export(shadow_env):
    m = wm.map_visibility(shadow_env, ANCHOR, cells=32)
    blob = wm.to_pgm(m)
    assert blob.startswith(b"P5\n32 32\n255\n")
    img = np.frombuffer(blob.split(b"\n", 3)[3], dtype=np.uint8).reshape(32, 32)
    assert np.array_equal(img[::-1, :] > 0, m.grid)


def test_json_rle_round_trip(shadow_env):
    m = wm.map_safe_reach(shadow_env, ANCHOR, 1.5, cells=47)
    back = wm.from_json_rle(wm.to_json_rle(m))
    assert np.array_equal(back.grid, m.grid)
    assert back.definition == 8
    assert np.allclose(back.anchor, ANCHOR)


def test_overlay_svg_deterministic(shadow_env):
    m = wm.map_visibility(shadow_env, ANCHOR, cells=24)
    assert wm.overlay_svg(m, shadow_env) == wm.overlay_svg(m, shadow_env)
    assert "<svg" in wm.overlay_svg(m, shadow_env)


def test_map_for_definition_dispatch(shadow_env):
    m9 = wm.map_for_definition(shadow_env, ANCHOR, 9, cells=30)
    free = wm.map_full_free(shadow_env, cells=30)
    assert np.array_equal(m9.grid, free.grid)
    m6 = wm.map_for_definition(shadow_env, ANCHOR, 6, cells=30)
    m7 = wm.map_for_definition(shadow_env, ANCHOR, 7, cells=30)
    assert np.array_equal(m6.grid, m7.grid)
    with pytest.raises(wm.MapError):
        wm.map_for_definition(shadow_env, ANCHOR, 3, cells=30)
    with pytest.raises(wm.MapError):
        wm.map_for_definition(shadow_env, ANCHOR, 10, cells=30)
