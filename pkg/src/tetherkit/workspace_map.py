"""Rasterized reachable-workspace maps per definition and inclusion checks.

A cell is true when the definition admits at least one non-entangled tether
configuration ending at the cell center.  Straightness-style definitions
reduce to line-of-sight from the anchor, the loop and local-visibility
definitions cover all free cells, and the safe-class definition dilates the
sight region by one clear hop of bounded length.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import TOL

# definitions whose reachable set is the anchor's line-of-sight region
SIGHT_DEFINITIONS = (1, 2, 6, 7)
# definitions reaching every free cell
FULL_DEFINITIONS = (4, 9)

DEFAULT_CELLS = 200

# stride used to decimate hop sources when dilating the sight region
DILATION_SOURCE_STRIDE = 2


class MapError(ValueError):
    pass


@dataclass(frozen=True)
class NEMap:
    definition: int
    origin: np.ndarray
    cell: np.ndarray  # (w, h) of one cell
    grid: np.ndarray  # bool (ny, nx), row-major, row 0 at origin.y
    anchor: np.ndarray | None = None

    @property
    def shape(self):
        return self.grid.shape

    def centers(self):
        ny, nx = self.grid.shape
        xs = self.origin[0] + (np.arange(nx) + 0.5) * self.cell[0]
        ys = self.origin[1] + (np.arange(ny) + 0.5) * self.cell[1]
        return xs, ys

    def same_grid(self, other):
        return (
            self.grid.shape == other.grid.shape
            and np.allclose(self.origin, other.origin)
            and np.allclose(self.cell, other.cell)
        )


def _grid_points(env, cells):
    lo, hi = env.lo, env.hi
    nx = ny = int(cells)
    cw = (hi[0] - lo[0]) / nx
    ch = (hi[1] - lo[1]) / ny
    xs = lo[0] + (np.arange(nx) + 0.5) * cw
    ys = lo[1] + (np.arange(ny) + 0.5) * ch
    gx, gy = np.meshgrid(xs, ys)
    return np.array([cw, ch]), np.ascontiguousarray(gx.ravel()), np.ascontiguousarray(gy.ravel())


def _free_mask(env, gx, gy, rings=None):
    rings = env.rings if rings is None else rings
    cls = _kernels.point_classes(gx, gy, rings, TOL)
    return cls != 2


def map_full_free(env, cells=DEFAULT_CELLS, definition=9):
    cell, gx, gy = _grid_points(env, cells)
    free = _free_mask(env, gx, gy)
    return NEMap(
        definition=definition,
        origin=env.lo.copy(),
        cell=cell,
        grid=free.reshape(cells, cells),
    )


def map_visibility(env, anchor, cells=DEFAULT_CELLS, definition=7, rings=None):
    anchor = np.asarray(anchor, dtype=np.float64)
    rings = env.rings if rings is None else rings
    if _kernels.point_class(anchor[0], anchor[1], rings, TOL) == 2:
        raise MapError("anchor lies inside an obstacle")
    cell, gx, gy = _grid_points(env, cells)
    free = _free_mask(env, gx, gy, rings)
    seen = _kernels.visibility_from(anchor[0], anchor[1], gx, gy, rings, TOL)
    grid = (np.asarray(seen) & free).reshape(cells, cells)
    return NEMap(definition=definition, origin=env.lo.copy(), cell=cell, grid=grid, anchor=anchor)


def map_safe_reach(env, anchor, d_max, cells=DEFAULT_CELLS, rings=None):
    """Sight region dilated by one clear straight hop of length <= d_max."""
    vis = map_visibility(env, anchor, cells=cells, definition=8, rings=rings)
    if d_max <= 0:
        return vis
    rings = env.rings if rings is None else rings
    cell, gx, gy = _grid_points(env, cells)
    free = _free_mask(env, gx, gy, rings)
    flat = vis.grid.ravel()
    target_idx = np.flatnonzero(free & ~flat)
    source_idx = np.flatnonzero(flat)
    grid2 = flat.copy()
    if len(target_idx) and len(source_idx):
        stride_rows = np.zeros_like(vis.grid)
        stride_rows[::DILATION_SOURCE_STRIDE, ::DILATION_SOURCE_STRIDE] = True
        decimated = np.flatnonzero((vis.grid & stride_rows).ravel())
        if len(decimated) == 0:
            decimated = source_idx
        hit = _kernels.reach_dilation(
            np.ascontiguousarray(gx[target_idx]),
            np.ascontiguousarray(gy[target_idx]),
            np.ascontiguousarray(gx[decimated]),
            np.ascontiguousarray(gy[decimated]),
            float(d_max),
            rings,
            TOL,
        )
        grid2[target_idx[np.asarray(hit)]] = True
    return NEMap(
        definition=8,
        origin=env.lo.copy(),
        cell=cell,
        grid=grid2.reshape(cells, cells),
        anchor=np.asarray(anchor, dtype=np.float64),
    )


def map_anchor_cell(env, anchor, cells=DEFAULT_CELLS, definition=5):
    """Single-cell map: closed tethers only reach their own anchor."""
    cell, gx, gy = _grid_points(env, cells)
    grid = np.zeros(cells * cells, dtype=bool)
    anchor = np.asarray(anchor, dtype=np.float64)
    ix = min(max(int((anchor[0] - env.lo[0]) / cell[0]), 0), cells - 1)
    iy = min(max(int((anchor[1] - env.lo[1]) / cell[1]), 0), cells - 1)
    grid[iy * cells + ix] = True
    return NEMap(definition=definition, origin=env.lo.copy(), cell=cell, grid=grid.reshape(cells, cells), anchor=anchor)


def map_for_definition(env, anchor, def_id, cells=DEFAULT_CELLS, d_max=2.0):
    if def_id in SIGHT_DEFINITIONS:
        return map_visibility(env, anchor, cells=cells, definition=def_id)
    if def_id in FULL_DEFINITIONS:
        m = map_full_free(env, cells=cells, definition=def_id)
        return NEMap(
            definition=def_id,
            origin=m.origin,
            cell=m.cell,
            grid=m.grid,
            anchor=np.asarray(anchor, dtype=np.float64),
        )
    if def_id == 8:
        return map_safe_reach(env, anchor, d_max, cells=cells)
    if def_id == 5:
        return map_anchor_cell(env, anchor, cells=cells)
    raise MapError(
        f"definition {def_id} has no reachable-workspace map: crossing-count "
        "verdicts depend on other robots and the relaxed variants are not "
        "characterized as point sets"
    )


def _transition_band(grid):
    """Cells within one cell (8-neighborhood) of a value change."""
    g = grid
    edge = np.zeros_like(g)
    edge[:, :-1] |= g[:, :-1] != g[:, 1:]
    edge[:, 1:] |= g[:, :-1] != g[:, 1:]
    edge[:-1, :] |= g[:-1, :] != g[1:, :]
    edge[1:, :] |= g[:-1, :] != g[1:, :]
    band = edge.copy()
    band[1:, :] |= edge[:-1, :]
    band[:-1, :] |= edge[1:, :]
    band[:, 1:] |= edge[:, :-1]
    band[:, :-1] |= edge[:, 1:]
    band[1:, 1:] |= edge[:-1, :-1]
    band[:-1, :-1] |= edge[1:, 1:]
    band[1:, :-1] |= edge[:-1, 1:]
    band[:-1, 1:] |= edge[1:, :-1]
    return band


def _violations(mask, band_a, band_b):
    """Cell indices failing a comparison outside both maps' boundary bands."""
    bad = mask & ~(band_a & band_b)
    return [[int(iy), int(ix)] for iy, ix in np.argwhere(bad)]


def check_inclusion_chain(maps):
    """Verify sight-region equalities, the safe-reach sandwich, and the
    free-space equalities cell-wise, excusing a one-cell boundary band.

    maps: dict keyed by definition id; needs 1, 2, 6, 7, 8, 4, 9.
    """
    needed = (1, 2, 6, 7, 8, 4, 9)
    for d in needed:
        if d not in maps:
            raise MapError(f"missing map for definition {d}")
    ref = maps[needed[0]]
    for d in needed[1:]:
        if not ref.same_grid(maps[d]):
            raise MapError("maps were computed on different grids")
    bands = {d: _transition_band(maps[d].grid) for d in needed}
    report = {"equalities": {}, "inclusions": {}, "ok": True}
    for a, b in ((1, 2), (1, 6), (1, 7), (4, 9)):
        cells = _violations(maps[a].grid != maps[b].grid, bands[a], bands[b])
        report["equalities"][f"{a}={b}"] = cells
        report["ok"] &= not cells
    for a, b in ((7, 8), (8, 4)):
        cells = _violations(maps[a].grid & ~maps[b].grid, bands[a], bands[b])
        report["inclusions"][f"{a}<={b}"] = cells
        report["ok"] &= not cells
    return report


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------


def to_pgm(nemap):
    """Binary PGM (P5), 255 = reachable, top row = max y."""
    ny, nx = nemap.grid.shape
    header = f"P5\n{nx} {ny}\n255\n".encode("ascii")
    img = np.where(nemap.grid[::-1, :], 255, 0).astype(np.uint8)
    return header + img.tobytes()


def to_json_rle(nemap):
    """Run-length encoding of the row-major flattened grid."""
    flat = nemap.grid.ravel()
    runs = []
    value = bool(flat[0])
    length = 0
    for v in flat:
        if bool(v) == value:
            length += 1
        else:
            runs.append(length)
            value = bool(v)
            length = 1
    runs.append(length)
    payload = {
        "definition": nemap.definition,
        "origin": [float(nemap.origin[0]), float(nemap.origin[1])],
        "cell": [float(nemap.cell[0]), float(nemap.cell[1])],
        "width": int(nemap.grid.shape[1]),
        "height": int(nemap.grid.shape[0]),
        "first": bool(flat[0]),
        "runs": runs,
    }
    if nemap.anchor is not None:
        payload["anchor"] = [float(nemap.anchor[0]), float(nemap.anchor[1])]
    return json.dumps(payload, indent=2) + "\n"


def from_json_rle(text):
    payload = json.loads(text)
    flat = np.zeros(payload["width"] * payload["height"], dtype=bool)
    value = payload["first"]
    pos = 0
    for run in payload["runs"]:
        if value:
            flat[pos : pos + run] = True
        pos += run
        value = not value
    return NEMap(
        definition=payload["definition"],
        origin=np.array(payload["origin"]),
        cell=np.array(payload["cell"]),
        grid=flat.reshape(payload["height"], payload["width"]),
        anchor=np.array(payload["anchor"]) if "anchor" in payload else None,
    )


def overlay_svg(nemap, env, fill="#4488cc"):
    """Deterministic SVG of a map over the workspace geometry."""
    lo, hi = env.lo, env.hi
    w = hi[0] - lo[0]
    h = hi[1] - lo[1]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w:.6g} {h:.6g}" '
        f'width="640" height="{640 * h / w:.6g}">',
        f'<g transform="translate(0,{h:.6g}) scale(1,-1)">',
        f'<rect x="0" y="0" width="{w:.6g}" height="{h:.6g}" fill="#ffffff" stroke="#000000" stroke-width="{w/320:.6g}"/>',
    ]
    ny, nx = nemap.grid.shape
    cw, ch = nemap.cell
    rows = []
    for iy in range(ny):
        run_start = None
        for ix in range(nx + 1):
            on = ix < nx and nemap.grid[iy, ix]
            if on and run_start is None:
                run_start = ix
            elif not on and run_start is not None:
                rows.append((iy, run_start, ix))
                run_start = None
    for iy, x0, x1 in rows:
        parts.append(
            f'<rect x="{(nemap.origin[0] - lo[0]) + x0 * cw:.6g}" '
            f'y="{(nemap.origin[1] - lo[1]) + iy * ch:.6g}" '
            f'width="{(x1 - x0) * cw:.6g}" height="{ch:.6g}" fill="{fill}" fill-opacity="0.5"/>'
        )
    for k, obs in enumerate(env.obstacles):
        pts = " ".join(f"{x - lo[0]:.6g},{y - lo[1]:.6g}" for x, y in obs.vertices)
        parts.append(f'<polygon id="obstacle-{k}" points="{pts}" fill="#888888" stroke="#444444" stroke-width="{w/640:.6g}"/>')
    if nemap.anchor is not None:
        parts.append(
            f'<circle cx="{nemap.anchor[0] - lo[0]:.6g}" cy="{nemap.anchor[1] - lo[1]:.6g}" '
            f'r="{w/128:.6g}" fill="#2255dd"/>'
        )
    parts.append("</g></svg>")
    return "\n".join(parts) + "\n"
