"""2D geometric primitives: predicates, hulls, clearance and inflation.

Points are plain ``(2,)`` float arrays (anything array-like is accepted).
Polygons are CCW simple rings, polylines carry cumulative arc lengths.
All degeneracy decisions use the shared absolute tolerance ``TOL``.
"""

import numpy as np
import shapely.geometry

from . import _kernels

# absolute degeneracy threshold, workspace units
TOL = 1e-9

# vertices per quarter circle when inflating polylines
ARC_SEGMENTS = 8


class GeometryError(ValueError):
    pass


def as_point(p):
    a = np.asarray(p, dtype=np.float64)
    if a.shape != (2,):
        raise GeometryError(f"expected a 2D point, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise GeometryError(f"non-finite point {a}")
    return a


def orient(p, q, r):
    """Sign of the cross product (q-p) x (r-p); 0 within TOL."""
    p, q, r = as_point(p), as_point(q), as_point(r)
    cross = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    if abs(cross) <= TOL:
        return 0
    return 1 if cross > 0.0 else -1


class Polygon:
    """Simple CCW polygon with positive area."""

    __slots__ = ("vertices", "_pole")

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise GeometryError("polygon needs at least 3 vertices")
        if not np.all(np.isfinite(v)):
            raise GeometryError("non-finite polygon vertex")
        area = signed_area(v)
        if area < 0.0:
            v = v[::-1].copy()
            area = -area
        if area <= TOL:
            raise GeometryError("polygon area is degenerate")
        if not _ring_is_simple(v):
            raise GeometryError("polygon is self-intersecting")
        self.vertices = v

    @classmethod
    def from_trusted(cls, vertices):
        """Construct without the quadratic simplicity check (for rings that
        come out of a boolean operation and are simple by construction)."""
        poly = cls.__new__(cls)
        v = np.asarray(vertices, dtype=np.float64)
        keep = [v[0]]
        for q in v[1:]:
            if np.linalg.norm(q - keep[-1]) > TOL:
                keep.append(q)
        while len(keep) > 1 and np.linalg.norm(keep[-1] - keep[0]) <= TOL:
            keep.pop()
        v = np.array(keep)
        if len(v) < 3:
            raise GeometryError("degenerate trusted ring")
        if signed_area(v) < 0.0:
            v = v[::-1].copy()
        poly.vertices = v
        return poly

    @property
    def area(self):
        return signed_area(self.vertices)

    def bounds(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def centroid(self):
        v = self.vertices
        x, y = v[:, 0], v[:, 1]
        xr, yr = np.roll(x, -1), np.roll(y, -1)
        cross = x * yr - xr * y
        a = cross.sum() / 2.0
        cx = ((x + xr) * cross).sum() / (6.0 * a)
        cy = ((y + yr) * cross).sum() / (6.0 * a)
        return np.array([cx, cy])

    def interior_point(self):
        """A point strictly inside: the centroid if interior, else a pole found by grid refinement."""
        c = self.centroid()
        if point_in_polygon(c, self) == "inside":
            return c
        return self.pole()

    def pole(self):
        try:
            pole = self._pole
        except AttributeError:
            pole = None
        if pole is None:
            pole = pole_of_inaccessibility(self)
            self._pole = pole
        return pole

    def __repr__(self):
        return f"Polygon({self.vertices.tolist()!r})"


def signed_area(vertices):
    v = np.asarray(vertices, dtype=np.float64)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _ring_is_simple(v):
    n = len(v)
    for i in range(n):
        a, b = v[i], v[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            c, d = v[j], v[(j + 1) % n]
            if segment_intersection((a, b), (c, d)) is not None:
                return False
    return True


class Polyline:
    """Open chain of vertices with constant-speed arc-length parametrization."""

    __slots__ = ("vertices", "cumlen")

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 2:
            raise GeometryError("polyline needs at least 2 vertices")
        if not np.all(np.isfinite(v)):
            raise GeometryError("non-finite polyline vertex")
        steps = np.linalg.norm(np.diff(v, axis=0), axis=1)
        if np.any(steps <= TOL):
            raise GeometryError("duplicate consecutive polyline vertices")
        self.vertices = v
        self.cumlen = np.concatenate([[0.0], np.cumsum(steps)])

    @property
    def length(self):
        return float(self.cumlen[-1])

    @property
    def start(self):
        return self.vertices[0]

    @property
    def end(self):
        return self.vertices[-1]

    def is_closed(self):
        return float(np.linalg.norm(self.start - self.end)) <= TOL

    def point_at(self, s):
        """Point at normalized arc parameter s in [0, 1]."""
        s = min(max(float(s), 0.0), 1.0)
        target = s * self.length
        k = int(np.searchsorted(self.cumlen, target, side="right")) - 1
        k = min(max(k, 0), len(self.vertices) - 2)
        seg = self.cumlen[k + 1] - self.cumlen[k]
        t = 0.0 if seg <= 0.0 else (target - self.cumlen[k]) / seg
        return (1.0 - t) * self.vertices[k] + t * self.vertices[k + 1]

    def param_of_vertex(self, k):
        return float(self.cumlen[k] / self.length)

    def slice(self, s1, s2):
        """Sub-polyline between normalized parameters s1 < s2."""
        if s2 - s1 <= TOL:
            raise GeometryError("empty polyline slice")
        p1 = self.point_at(s1)
        p2 = self.point_at(s2)
        lo = s1 * self.length
        hi = s2 * self.length
        mask = (self.cumlen > lo + TOL) & (self.cumlen < hi - TOL)
        mid = self.vertices[mask]
        pts = [p1]
        for q in mid:
            if np.linalg.norm(q - pts[-1]) > TOL:
                pts.append(q)
        if np.linalg.norm(p2 - pts[-1]) > TOL:
            pts.append(p2)
        if len(pts) < 2:
            pts = [p1, p2 + 0.0]
        return Polyline(np.array(pts))

    def reversed(self):
        return Polyline(self.vertices[::-1].copy())

    def __repr__(self):
        return f"Polyline({len(self.vertices)} vertices, length {self.length:.6g})"


def concatenate(a, b):
    """Join two polylines sharing an endpoint (a ends where b starts)."""
    if np.linalg.norm(a.end - b.start) > 1e-7:
        raise GeometryError("polylines do not share an endpoint")
    pts = [a.vertices]
    bv = b.vertices
    if np.linalg.norm(bv[0] - a.end) <= TOL:
        bv = bv[1:]
    if len(bv):
        pts.append(bv)
    merged = np.concatenate(pts)
    keep = [merged[0]]
    for q in merged[1:]:
        if np.linalg.norm(q - keep[-1]) > TOL:
            keep.append(q)
    if len(keep) < 2:
        keep.append(merged[-1] + np.array([TOL * 10, 0.0]))
    return Polyline(np.array(keep))


def segment_intersection(s1, s2):
    """Intersection of two segments.

    Returns None, ("point", point, t1, t2), or ("overlap", p_lo, p_hi) for
    collinear overlap.  Endpoint touches count as intersections.
    """
    a1, b1 = as_point(s1[0]), as_point(s1[1])
    a2, b2 = as_point(s2[0]), as_point(s2[1])
    d1 = b1 - a1
    d2 = b2 - a2
    r = a2 - a1
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    scale = max(1.0, np.abs(d1).sum() + np.abs(d2).sum())
    if abs(denom) > TOL * scale:
        t1 = (r[0] * d2[1] - r[1] * d2[0]) / denom
        t2 = (r[0] * d1[1] - r[1] * d1[0]) / denom
        eps = 1e-9
        if -eps <= t1 <= 1.0 + eps and -eps <= t2 <= 1.0 + eps:
            t1 = min(max(t1, 0.0), 1.0)
            t2 = min(max(t2, 0.0), 1.0)
            return ("point", a1 + t1 * d1, t1, t2)
        return None
    # parallel
    if abs(r[0] * d1[1] - r[1] * d1[0]) > TOL * scale:
        return None
    # collinear: project onto the longer direction
    seg2 = float(d1 @ d1)
    if seg2 <= TOL * TOL:
        # s1 degenerate: point-on-segment test
        seg2b = float(d2 @ d2)
        if seg2b <= TOL * TOL:
            if np.linalg.norm(a1 - a2) <= TOL:
                return ("point", a1.copy(), 0.0, 0.0)
            return None
        t2 = float((a1 - a2) @ d2) / seg2b
        if -1e-9 <= t2 <= 1 + 1e-9:
            return ("point", a1.copy(), 0.0, min(max(t2, 0.0), 1.0))
        return None
    u0 = float((a2 - a1) @ d1) / seg2
    u1 = float((b2 - a1) @ d1) / seg2
    lo, hi = min(u0, u1), max(u0, u1)
    lo = max(lo, 0.0)
    hi = min(hi, 1.0)
    if hi < lo - 1e-9:
        return None
    if hi - lo <= 1e-9:
        t1 = 0.5 * (lo + hi)
        p = a1 + t1 * d1
        seg2b = float(d2 @ d2)
        t2 = float((p - a2) @ d2) / seg2b if seg2b > 0 else 0.0
        return ("point", p, min(max(t1, 0.0), 1.0), min(max(t2, 0.0), 1.0))
    return ("overlap", a1 + lo * d1, a1 + hi * d1)


def convex_hull(points):
    """Monotone-chain hull; CCW vertex array, 2 points when all collinear."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
        raise GeometryError("convex_hull needs at least one point")
    uniq = np.unique(pts, axis=0)
    order = np.lexsort((uniq[:, 1], uniq[:, 0]))
    uniq = uniq[order]
    if len(uniq) == 1:
        return uniq.copy()
    def build(chain_pts):
        chain = []
        for p in chain_pts:
            while len(chain) >= 2 and orient(chain[-2], chain[-1], p) <= 0:
                chain.pop()
            chain.append(p)
        return chain
    lower = build(uniq)
    upper = build(uniq[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:
        return np.array([uniq[0], uniq[-1]])
    return hull


def point_in_polygon(p, poly):
    """Classify a point against a simple polygon: inside | boundary | outside."""
    p = as_point(p)
    v = poly.vertices if isinstance(poly, Polygon) else np.asarray(poly, dtype=np.float64)
    rings = _kernels.pack_rings([v])
    cls = _kernels.point_class(p[0], p[1], rings, TOL)
    return ("outside", "boundary", "inside")[cls]


def pack_obstacles(obstacles):
    """Pack a list of Polygon obstacles for the kernels."""
    return _kernels.pack_rings([o.vertices for o in obstacles])


def segment_clear(seg, obstacles, rings=None):
    """True iff the open segment misses every obstacle interior (grazing allowed)."""
    a, b = as_point(seg[0]), as_point(seg[1])
    if rings is None:
        if not obstacles:
            return True
        rings = pack_obstacles(obstacles)
    return _kernels.segment_clear_packed(a[0], a[1], b[0], b[1], rings, TOL)


def polyline_clear(line, obstacles, rings=None):
    if rings is None:
        if not obstacles:
            return True
        rings = pack_obstacles(obstacles)
    v = line.vertices
    for k in range(len(v) - 1):
        if not _kernels.segment_clear_packed(v[k][0], v[k][1], v[k + 1][0], v[k + 1][1], rings, TOL):
            return False
    return True


def polygon_interiors_intersect(a, b):
    """True iff the open interiors overlap; shared edges and touches do not count."""
    rings_b = _kernels.pack_rings([b.vertices])
    rings_a = _kernels.pack_rings([a.vertices])
    va, vb = a.vertices, b.vertices
    for k in range(len(va)):
        p, q = va[k], va[(k + 1) % len(va)]
        if not _kernels.segment_clear_packed(p[0], p[1], q[0], q[1], rings_b, TOL):
            return True
    for k in range(len(vb)):
        p, q = vb[k], vb[(k + 1) % len(vb)]
        if not _kernels.segment_clear_packed(p[0], p[1], q[0], q[1], rings_a, TOL):
            return True
    # no boundary passes through the other interior: nested or disjoint
    pa = a.interior_point()
    pb = b.interior_point()
    if _kernels.point_class(pa[0], pa[1], rings_b, TOL) == 2:
        return True
    if _kernels.point_class(pb[0], pb[1], rings_a, TOL) == 2:
        return True
    return False


def self_intersections(line):
    """Crossings between non-adjacent segments of a polyline.

    Returns a list of (s1, s2, point) with 0 <= s1 < s2 <= 1 normalized by
    arc length.  The shared endpoint of a closed polyline is not reported.
    """
    v = line.vertices
    n = len(v) - 1
    total = line.length
    closed = line.is_closed()
    found = []
    for i in range(n):
        for j in range(i + 2, n):
            hit = segment_intersection((v[i], v[i + 1]), (v[j], v[j + 1]))
            if hit is None:
                continue
            if hit[0] == "point":
                _, p, t1, t2 = hit
                s1 = (line.cumlen[i] + t1 * (line.cumlen[i + 1] - line.cumlen[i])) / total
                s2 = (line.cumlen[j] + t2 * (line.cumlen[j + 1] - line.cumlen[j])) / total
                events = [(s1, s2, p)]
            else:
                _, plo, phi = hit
                events = []
                for p in (plo, phi):
                    t1 = _param_on_segment(p, v[i], v[i + 1])
                    t2 = _param_on_segment(p, v[j], v[j + 1])
                    s1 = (line.cumlen[i] + t1 * (line.cumlen[i + 1] - line.cumlen[i])) / total
                    s2 = (line.cumlen[j] + t2 * (line.cumlen[j + 1] - line.cumlen[j])) / total
                    events.append((s1, s2, p))
            for s1, s2, p in events:
                if closed and s1 <= TOL and s2 >= 1.0 - TOL:
                    continue
                found.append((min(s1, s2), max(s1, s2), p))
    found.sort(key=lambda e: (e[0], e[1]))
    return found


def _param_on_segment(p, a, b):
    d = b - a
    seg2 = float(d @ d)
    if seg2 <= 0.0:
        return 0.0
    return min(max(float((p - a) @ d) / seg2, 0.0), 1.0)


def inflate_polyline(line, eps):
    """Polygon covering every point within eps of the polyline (round caps).

    The outline is the buffered exterior ring; interior rings of nearly
    closed chains are discarded.
    """
    if eps <= 0.0:
        raise GeometryError("inflation radius must be positive")
    ls = shapely.geometry.LineString(line.vertices)
    buf = ls.buffer(eps, quad_segs=ARC_SEGMENTS)
    if buf.geom_type == "MultiPolygon":  # pragma: no cover - connected input
        buf = max(buf.geoms, key=lambda g: g.area)
    ring = np.asarray(buf.exterior.coords)[:-1]
    return Polygon.from_trusted(ring)


def hausdorff_to_segment(line, a, b):
    """Max distance from polyline points to segment (a,b); exact on vertices."""
    a, b = as_point(a), as_point(b)
    d = b - a
    seg2 = float(d @ d)
    worst = 0.0
    for p in line.vertices:
        if seg2 <= 0.0:
            dist = float(np.linalg.norm(p - a))
        else:
            t = min(max(float((p - a) @ d) / seg2, 0.0), 1.0)
            dist = float(np.linalg.norm(a + t * d - p))
        worst = max(worst, dist)
    return worst


def pole_of_inaccessibility(poly, iterations=16):
    """Interior point maximizing clearance from the boundary, by grid refinement."""
    v = poly.vertices
    lo = v.min(axis=0)
    hi = v.max(axis=0)
    rings = _kernels.pack_rings([v])
    a = v
    b = np.roll(v, -1, axis=0)
    d = b - a
    seg2 = np.maximum((d * d).sum(axis=1), 1e-300)

    def clearances(pts):
        # (P, E) point-to-edge distances, reduced over edges
        t = ((pts[:, None, :] - a) * d).sum(axis=2) / seg2
        t = np.clip(t, 0.0, 1.0)
        closest = a + t[:, :, None] * d
        return np.sqrt(((closest - pts[:, None, :]) ** 2).sum(axis=2)).min(axis=1)

    best_p = None
    best_c = -np.inf
    cx, cy = (lo + hi) / 2.0
    half = (hi - lo) / 2.0
    for _ in range(iterations):
        xs = np.linspace(cx - half[0], cx + half[0], 5)
        ys = np.linspace(cy - half[1], cy + half[1], 5)
        gx, gy = np.meshgrid(xs, ys)
        pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
        inside = _kernels.point_classes(
            np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1]), rings, TOL
        ) == 2
        if inside.any():
            cand = pts[inside]
            cl = clearances(cand)
            k = int(np.argmax(cl))
            if cl[k] > best_c:
                best_c = float(cl[k])
                best_p = cand[k]
        half = half / 2.0
        if best_p is not None:
            cx, cy = best_p
    if best_p is None:
        raise GeometryError("no interior point found")
    return best_p
