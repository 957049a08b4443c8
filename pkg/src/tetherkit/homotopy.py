"""Homotopy machinery: crossing words, class tests, taut paths, leash bounds.

A workspace with punctures is encoded by a set of representative curves;
the reduced sequence of signed curve crossings along a path identifies its
path-homotopy class.  Static obstacles contribute two opposite rays from an
interior anchor sharing one letter; the tethers of other robots contribute
their segments as curves sharing the robot's letter family.
"""

import heapq
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import TOL, Polyline, pack_obstacles, segment_clear

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


class HomotopyError(ValueError):
    pass


class ClassSearchOverflow(HomotopyError):
    """Raised when the word-bounded taut-path search exhausts its budget."""


@dataclass(frozen=True)
class Letter:
    curve: str
    sign: int

    def inverse(self):
        return Letter(self.curve, -self.sign)

    def __str__(self):
        return f"{self.curve}{'+' if self.sign > 0 else '-'}"


@dataclass(frozen=True)
class Word:
    letters: tuple
    reduced: bool = False

    def __len__(self):
        return len(self.letters)

    def __str__(self):
        return " ".join(str(l) for l in self.letters) if self.letters else "e"


EMPTY_WORD = Word((), reduced=True)


def reduce_word(word):
    """Free-group normal form: cancel adjacent inverse pairs until stable."""
    letters = word.letters if isinstance(word, Word) else tuple(word)
    stack = []
    for let in letters:
        if stack and stack[-1].curve == let.curve and stack[-1].sign == -let.sign:
            stack.pop()
        else:
            stack.append(let)
    return Word(tuple(stack), reduced=True)


def concat_words(*words):
    letters = []
    for w in words:
        letters.extend(w.letters if isinstance(w, Word) else w)
    return reduce_word(Word(tuple(letters)))


def inverse_word(word):
    letters = word.letters if isinstance(word, Word) else tuple(word)
    return Word(tuple(l.inverse() for l in reversed(letters)), reduced=word.reduced if isinstance(word, Word) else False)


def word_str(word):
    return str(word if isinstance(word, Word) else Word(tuple(word)))


@dataclass(frozen=True)
class Curve:
    """Directed representative curve (a clipped ray or a tether segment)."""

    letter: str
    p0: np.ndarray
    p1: np.ndarray
    # half-open curves exclude the far-end parameter so chained segments
    # sharing a joint count a crossing exactly once
    closed_end: bool = True

    def direction(self):
        d = self.p1 - self.p0
        return d / np.linalg.norm(d)


@dataclass(frozen=True)
class RepresentativeCurves:
    direction: np.ndarray
    curves: tuple

    @property
    def count(self):
        return len(self.curves)


def _clip_ray(anchor, direction, bounds_lo, bounds_hi):
    """Far point of a ray from anchor, just past the bounding box."""
    diag = float(np.linalg.norm(bounds_hi - bounds_lo))
    return anchor + direction * (2.5 * diag + 1.0)


def _segments_hit(p0, p1, q0, q1, margin):
    """Do two segments come within margin of touching?"""
    d1 = p1 - p0
    d2 = q1 - q0
    r = q0 - p0
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(denom) > 1e-12:
        t = (r[0] * d2[1] - r[1] * d2[0]) / denom
        u = (r[0] * d1[1] - r[1] * d1[0]) / denom
        if -1e-9 <= t <= 1 + 1e-9 and -1e-9 <= u <= 1 + 1e-9:
            return True
    return _segment_gap(p0, p1, q0, q1) <= margin


def _point_seg_dist(p, a, b):
    d = b - a
    seg2 = float(d @ d)
    if seg2 <= 0.0:
        return float(np.linalg.norm(p - a))
    t = min(max(float((p - a) @ d) / seg2, 0.0), 1.0)
    return float(np.linalg.norm(a + t * d - p))


def _segment_gap(p0, p1, q0, q1):
    return min(
        _point_seg_dist(p0, q0, q1),
        _point_seg_dist(p1, q0, q1),
        _point_seg_dist(q0, p0, p1),
        _point_seg_dist(q1, p0, p1),
    )


def build_representative_curves(bounds, ray_obstacles, segment_chains=(), v=(0.0, 1.0), attempts=64):
    """Construct disjoint representative curves for a punctured workspace.

    ray_obstacles: list of (letter, Polygon); each gets two opposite rays
    from its pole of inaccessibility along +-v, sharing the letter.
    segment_chains: list of (letter_prefix, Polyline); every segment becomes
    a curve named ``<prefix>.s<k>``.
    The direction is rotated on a golden-angle schedule until all curves are
    pairwise disjoint and no ray clips another obstacle or a chain.
    """
    lo = np.asarray(bounds[0], dtype=np.float64)
    hi = np.asarray(bounds[1], dtype=np.float64)
    v0 = np.asarray(v, dtype=np.float64)
    n0 = np.linalg.norm(v0)
    if n0 <= TOL:
        raise HomotopyError("zero direction vector")
    v0 = v0 / n0
    margin = 1e-7 * max(1.0, float(np.linalg.norm(hi - lo)))

    anchors = [(letter, poly.pole(), poly) for letter, poly in ray_obstacles]
    chain_curves = []
    for prefix, line in segment_chains:
        verts = line.vertices
        last = len(verts) - 2
        for k in range(len(verts) - 1):
            chain_curves.append(
                Curve(f"{prefix}.s{k}", verts[k].copy(), verts[k + 1].copy(), closed_end=(k == last))
            )

    base_angle = math.atan2(v0[1], v0[0])
    for attempt in range(attempts):
        ang = base_angle + GOLDEN_ANGLE * attempt
        d = np.array([math.cos(ang), math.sin(ang)])
        rays = []
        for letter, anchor, _poly in anchors:
            rays.append(Curve(letter, anchor.copy(), _clip_ray(anchor, d, lo, hi)))
            rays.append(Curve(letter, anchor.copy(), _clip_ray(anchor, -d, lo, hi)))
        if _curves_valid(rays, chain_curves, [p for _, _, p in anchors], margin):
            return RepresentativeCurves(direction=d, curves=tuple(rays + chain_curves))
    raise HomotopyError("could not find a direction with disjoint representative curves")


def _curves_valid(rays, chains, polygons, margin):
    # a ray must leave its own obstacle and then stay clear of every other
    # obstacle, every other ray line, every chain segment, and all corners
    for idx, ray in enumerate(rays):
        own = idx // 2
        for oidx, poly in enumerate(polygons):
            v = poly.vertices
            n = len(v)
            if oidx != own:
                for k in range(n):
                    if _segments_hit(ray.p0, ray.p1, v[k], v[(k + 1) % n], margin):
                        return False
            # transversality margin at every corner, own obstacle included
            for p in v:
                if _point_seg_dist(p, ray.p0, ray.p1) <= margin:
                    return False
        for chain in chains:
            if _segments_hit(ray.p0, ray.p1, chain.p0, chain.p1, margin):
                return False
    # opposite-ray pairs of distinct obstacles must not be collinear
    for i in range(0, len(rays), 2):
        for j in range(i + 2, len(rays), 2):
            for a in (rays[i], rays[i + 1]):
                for b in (rays[j], rays[j + 1]):
                    if _segments_hit(a.p0, a.p1, b.p0, b.p1, margin):
                        return False
    return True


def crossing_events(line, curves):
    """Signed curve crossings along a polyline.

    Returns a list of (s, Letter) sorted by the normalized arc parameter.
    Vertices that fall exactly on a curve line are treated as lying a hair
    on its positive side, which resolves tangencies into canceling pairs.
    """
    if isinstance(curves, RepresentativeCurves):
        curve_list = curves.curves
    else:
        curve_list = tuple(curves)
    verts = line.vertices
    total = line.length
    events = []
    for curve in curve_list:
        d = curve.p1 - curve.p0
        norm = float(np.linalg.norm(d))
        if norm <= TOL:
            continue
        sides = (d[0] * (verts[:, 1] - curve.p0[1]) - d[1] * (verts[:, 0] - curve.p0[0]))
        eps = TOL * max(1.0, norm)
        sides = np.where(np.abs(sides) <= eps, eps, sides)
        sgn = np.sign(sides)
        for k in range(len(verts) - 1):
            if sgn[k] == sgn[k + 1]:
                continue
            t = sides[k] / (sides[k] - sides[k + 1])
            x = verts[k] + t * (verts[k + 1] - verts[k])
            u = float((x - curve.p0) @ d) / (norm * norm)
            if u < -1e-12:
                continue
            if curve.closed_end:
                if u > 1.0 + 1e-12:
                    continue
            elif u >= 1.0:
                continue
            s = (line.cumlen[k] + t * (line.cumlen[k + 1] - line.cumlen[k])) / total
            sign = 1 if sgn[k] < 0 else -1
            events.append((float(s), Letter(curve.letter, sign)))
    events.sort(key=lambda e: e[0])
    return events


def signature(line, curves):
    """Reduced crossing word of a path; a complete path-class invariant."""
    return reduce_word(Word(tuple(let for _, let in crossing_events(line, curves))))


def signature_of_segment(a, b, curves):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if np.linalg.norm(b - a) <= TOL:
        return EMPTY_WORD
    return signature(Polyline([a, b]), curves)


def path_homotopic(line1, line2, curves):
    """Same endpoints and same reduced crossing word."""
    if np.linalg.norm(line1.start - line2.start) > 1e-7 or np.linalg.norm(line1.end - line2.end) > 1e-7:
        raise HomotopyError("paths do not share endpoints")
    return signature(line1, curves).letters == signature(line2, curves).letters


def loop_null_homotopic(loop, curves):
    if not loop.is_closed():
        raise HomotopyError("loop is not closed")
    return len(signature(loop, curves)) == 0


def relatively_homotopic(line1, line2, lam_start, lam_end, curves):
    """Endpoints of line1 slide along the two connector paths onto line2."""
    w_start = signature(lam_start, curves) if lam_start is not None else EMPTY_WORD
    w_end = signature(lam_end, curves) if lam_end is not None else EMPTY_WORD
    s1 = line1.start if lam_start is None else lam_start.start
    s2 = line2.start if lam_start is None else lam_start.end
    e1 = line1.end if lam_end is None else lam_end.start
    e2 = line2.end if lam_end is None else lam_end.end
    for got, want, name in (
        (s1, line1.start, "start of first path"),
        (s2, line2.start, "start of second path"),
        (e1, line1.end, "end of first path"),
        (e2, line2.end, "end of second path"),
    ):
        if np.linalg.norm(np.asarray(got) - np.asarray(want)) > 1e-7:
            raise HomotopyError(f"connector does not meet the {name}")
    lhs = concat_words(inverse_word(w_start), signature(line1, curves), w_end)
    return lhs.letters == signature(line2, curves).letters


# ---------------------------------------------------------------------------
# shortest and taut paths
# ---------------------------------------------------------------------------


def point_path(p):
    """Zero-length degenerate path at a point."""
    line = Polyline.__new__(Polyline)
    p = np.asarray(p, dtype=np.float64)
    line.vertices = np.array([p, p])
    line.cumlen = np.array([0.0, 0.0])
    return line


def _graph_nodes(x1, x2, obstacles):
    nodes = [np.asarray(x1, dtype=np.float64), np.asarray(x2, dtype=np.float64)]
    for obs in obstacles:
        nodes.extend(obs.vertices)
    return np.array(nodes)


def _visibility(nodes, rings):
    xs = np.ascontiguousarray(nodes[:, 0])
    ys = np.ascontiguousarray(nodes[:, 1])
    return _kernels.pairwise_visibility(xs, ys, rings, TOL)


def shortest_path(x1, x2, obstacles, rings=None):
    """Globally shortest obstacle-avoiding path via the visibility graph."""
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if rings is None:
        rings = pack_obstacles(obstacles)
    for p in (x1, x2):
        if _kernels.point_class(p[0], p[1], rings, TOL) == 2:
            raise HomotopyError("endpoint lies inside an obstacle")
    if np.linalg.norm(x2 - x1) <= TOL:
        return point_path(x1)
    nodes = _graph_nodes(x1, x2, obstacles)
    vis = _visibility(nodes, rings)
    n = len(nodes)
    dist = np.full(n, np.inf)
    prev = np.full(n, -1, dtype=np.int64)
    dist[0] = 0.0
    heap = [(0.0, 0)]
    while heap:
        d, i = heapq.heappop(heap)
        if d > dist[i] + 1e-12:
            continue
        if i == 1:
            break
        for j in range(n):
            if not vis[i, j] or j == i:
                continue
            nd = d + float(np.linalg.norm(nodes[j] - nodes[i]))
            if nd < dist[j] - 1e-12:
                dist[j] = nd
                prev[j] = i
                heapq.heappush(heap, (nd, j))
    if not np.isfinite(dist[1]):
        raise HomotopyError("no obstacle-free path between the points")
    idx = [1]
    while idx[-1] != 0:
        idx.append(int(prev[idx[-1]]))
    pts = [nodes[i] for i in reversed(idx)]
    keep = [pts[0]]
    for q in pts[1:]:
        if np.linalg.norm(q - keep[-1]) > TOL:
            keep.append(q)
    if len(keep) < 2:
        return point_path(keep[0])
    return Polyline(np.array(keep))


class _EdgeWordCache:
    def __init__(self, nodes, curves):
        self.nodes = nodes
        self.curves = curves
        self.cache = {}

    def word(self, i, j):
        key = (i, j)
        got = self.cache.get(key)
        if got is not None:
            return got
        w = signature_of_segment(self.nodes[i], self.nodes[j], self.curves)
        self.cache[key] = w
        self.cache[(j, i)] = inverse_word(w)
        return w


def taut_path_in_class(x1, x2, target_word, obstacles, curves, rings=None, word_cap=None):
    """Shortest path from x1 to x2 whose crossing word equals target_word.

    Dijkstra over (visibility-graph vertex, reduced prefix word) states;
    prefixes longer than the cap are pruned.
    """
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    target = reduce_word(target_word).letters
    n_curves = curves.count if isinstance(curves, RepresentativeCurves) else len(tuple(curves))
    if word_cap is None:
        word_cap = 2 * len(target) + 2 * n_curves
    if rings is None:
        rings = pack_obstacles(obstacles)
    coincident = np.linalg.norm(x2 - x1) <= TOL
    if coincident and not target:
        return point_path(x1)
    nodes = _graph_nodes(x1, x2, obstacles)
    vis = _visibility(nodes, rings)
    ew = _EdgeWordCache(nodes, curves)
    n = len(nodes)
    start = (0, ())
    goal = (0 if coincident else 1, target)
    best = {start: 0.0}
    prev = {}
    tick = 0
    heap = [(0.0, tick, start)]
    counter = 0
    while heap:
        d, _, state = heapq.heappop(heap)
        if d > best.get(state, np.inf) + 1e-12:
            continue
        if state == goal:
            path = [state]
            while path[-1] in prev:
                path.append(prev[path[-1]])
            pts = [nodes[s[0]] for s in reversed(path)]
            keep = [pts[0]]
            for q in pts[1:]:
                if np.linalg.norm(q - keep[-1]) > TOL:
                    keep.append(q)
            if len(keep) < 2:
                return point_path(keep[0])
            return Polyline(np.array(keep))
        i, w = state
        for j in range(n):
            if j == i or not vis[i, j]:
                continue
            step = float(np.linalg.norm(nodes[j] - nodes[i]))
            if step <= TOL:
                continue
            nw = concat_words(Word(w, reduced=True), ew.word(i, j)).letters
            if len(nw) > word_cap:
                continue
            ns = (j, nw)
            nd = d + step
            if nd < best.get(ns, np.inf) - 1e-12:
                best[ns] = nd
                prev[ns] = state
                tick += 1
                heapq.heappush(heap, (nd, tick, ns))
                counter += 1
                if counter > 2_000_000:
                    raise ClassSearchOverflow("taut-path state budget exhausted")
    raise ClassSearchOverflow("no path found within the word-length cap")


def taut_representative(line, obstacles, curves, rings=None):
    """Shortest path in the path-homotopy class of the input."""
    w = signature(line, curves)
    taut = taut_path_in_class(line.start, line.end, w, obstacles, curves, rings=rings)
    return taut


def taut_length_in_class(x1, x2, word, obstacles, curves, rings=None):
    path = taut_path_in_class(x1, x2, word, obstacles, curves, rings=rings)
    return path.length


# ---------------------------------------------------------------------------
# homotopic Frechet upper bound
# ---------------------------------------------------------------------------


def _prefix_words(line, curves, params):
    events = crossing_events(line, curves)
    words = []
    k = 0
    acc = []
    for s in params:
        while k < len(events) and events[k][0] <= s + 1e-12:
            acc.append(events[k][1])
            k += 1
        words.append(reduce_word(Word(tuple(acc))))
    return words


def homotopic_frechet_upper(line1, line2, obstacles, curves, n=64, rings=None, cell_bound="taut"):
    """Upper bound on the homotopic Frechet distance between two paths.

    Dynamic program over the monotone n x n reparametrization grid; the
    leash class at each state follows from the traversed prefixes, and the
    leash length is the taut representative of that class.  With
    cell_bound="backtrack" the taut search is replaced by the length of the
    leash that retreats along one path, crosses a shared-end connector, and
    advances along the other: a representative of the same class, hence
    still an upper bound, at a fraction of the cost.
    """
    if rings is None:
        rings = pack_obstacles(obstacles)
    params = np.linspace(0.0, 1.0, n + 1)
    pts1 = np.array([line1.point_at(s) for s in params])
    pts2 = np.array([line2.point_at(s) for s in params])
    has_topology = bool(obstacles) or (curves.count if isinstance(curves, RepresentativeCurves) else len(tuple(curves)))
    d_direct = np.linalg.norm(pts1[:, None, :] - pts2[None, :, :], axis=2)
    if not has_topology:
        lengths = d_direct
    else:
        pref1 = _prefix_words(line1, curves, params)
        pref2 = _prefix_words(line2, curves, params)
        if np.linalg.norm(pts1[0] - pts2[0]) <= TOL:
            w00 = EMPTY_WORD
            l00 = 0.0
        else:
            conn = shortest_path(pts1[0], pts2[0], obstacles, rings=rings)
            w00 = signature(conn, curves)
            l00 = conn.length
        if np.linalg.norm(pts1[-1] - pts2[-1]) <= TOL:
            l11 = 0.0
        else:
            l11 = shortest_path(pts1[-1], pts2[-1], obstacles, rings=rings).length
        arc1 = params * line1.length
        arc2 = params * line2.length
        lengths = np.empty_like(d_direct)
        inv1 = [inverse_word(w) for w in pref1]
        for i in range(n + 1):
            left = concat_words(inv1[i], w00)
            for j in range(n + 1):
                w = concat_words(left, pref2[j])
                if not w.letters:
                    if d_direct[i, j] <= TOL:
                        lengths[i, j] = 0.0
                        continue
                    if segment_clear((pts1[i], pts2[j]), obstacles, rings=rings):
                        lengths[i, j] = d_direct[i, j]
                        continue
                if cell_bound == "backtrack":
                    lengths[i, j] = min(
                        arc1[i] + l00 + arc2[j],
                        (arc1[-1] - arc1[i]) + l11 + (arc2[-1] - arc2[j]),
                    )
                else:
                    lengths[i, j] = taut_length_in_class(
                        pts1[i], pts2[j], w, obstacles, curves, rings=rings
                    )
    dp = np.full((n + 1, n + 1), np.inf)
    dp[0, 0] = lengths[0, 0]
    for i in range(n + 1):
        for j in range(n + 1):
            if i == 0 and j == 0:
                continue
            prior = np.inf
            if i > 0:
                prior = min(prior, dp[i - 1, j])
            if j > 0:
                prior = min(prior, dp[i, j - 1])
            if i > 0 and j > 0:
                prior = min(prior, dp[i - 1, j - 1])
            dp[i, j] = max(lengths[i, j], prior)
    return float(dp[n, n])
