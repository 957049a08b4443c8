"""Per-definition non-entanglement evaluators and the all-definitions dispatcher.

Each evaluator returns a Verdict: not entangled, entangled with witness
evidence, or not applicable with the name of the failed precondition.
Definition ids 1-11 are stable identifiers used across reports:

  1 straight taut tether            7 obstacle-free linear retraction
  2 straight taut tether, multi     8 reachable safe class
  3 other-tether crossing count     9 local visibility homotopy
  4 loops null-homotopic           10 relaxed-by-deformation variant of a base
  5 closed tether null-homotopic   11 class-relaxed local visibility
  6 obstacle-free convex hull
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, geometry, homotopy
from .environment import effective_environment, leash_curves, representative_curves
from .geometry import TOL, Polyline
from .homotopy import (
    EMPTY_WORD,
    ClassSearchOverflow,
    HomotopyError,
    RepresentativeCurves,
    Word,
    concat_words,
    crossing_events,
    reduce_word,
    signature_of_segment,
    word_str,
)

log = logging.getLogger(__name__)

DEFINITION_IDS = (1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11)

NOT_ENTANGLED = "N"
ENTANGLED = "E"
NOT_APPLICABLE = "--"


@dataclass(frozen=True)
class Verdict:
    state: str
    reason: str | None = None
    witness: dict | None = None

    def __post_init__(self):
        if self.state == ENTANGLED and self.witness is None:
            raise ValueError("entangled verdicts need a witness")
        if self.state == NOT_APPLICABLE and not self.reason:
            raise ValueError("not-applicable verdicts need a reason")

    @property
    def not_entangled(self):
        return self.state == NOT_ENTANGLED

    @property
    def entangled(self):
        return self.state == ENTANGLED

    @property
    def applicable(self):
        return self.state != NOT_APPLICABLE


def verdict_n(witness=None):
    return Verdict(NOT_ENTANGLED, witness=witness)


def verdict_e(witness):
    return Verdict(ENTANGLED, witness=witness)


def verdict_na(reason):
    return Verdict(NOT_APPLICABLE, reason=reason)


def _is_homotopy_letter(letter):
    return not letter.curve.startswith("r")


class ScenarioContext:
    """Shared per-scenario caches: effective environment, curves, words."""

    def __init__(self, scenario):
        self.scenario = scenario
        self.params = scenario.params
        self.eff = effective_environment(scenario)
        self.projected = scenario.dimension == "3D-projected"
        self.curves = representative_curves(self.eff)
        self.h_curves = RepresentativeCurves(
            direction=self.curves.direction,
            curves=tuple(c for c in self.curves.curves if not c.letter.startswith("r")),
        )
        self.obstacles = self.eff.blocking_obstacles
        self.rings = self.eff.blocking_rings()
        self.focus = scenario.focus_tether
        self.path = self.focus.path
        self._events = None
        self._taut = None
        self._taut_error = None
        self._leash = None
        self.memo = {}

    @property
    def events(self):
        """Crossing events of the focus path against the full curve set."""
        if self._events is None:
            self._events = crossing_events(self.path, self.curves)
        return self._events

    def h_word(self, events=None):
        events = self.events if events is None else events
        return reduce_word(Word(tuple(l for _, l in events if _is_homotopy_letter(l))))

    def h_events(self, line):
        return crossing_events(line, self.h_curves)

    def taut_rep(self):
        if self._taut is None and self._taut_error is None:
            try:
                self._taut = homotopy.taut_representative(
                    self.path, self.obstacles, self.h_curves, rings=self.rings
                )
            except ClassSearchOverflow as exc:
                self._taut_error = exc
        if self._taut_error is not None:
            raise self._taut_error
        return self._taut

    def leash_setup(self):
        """Obstacle set and curves used for deformation-leash classes."""
        if self._leash is None:
            obstacles = self.eff.leash_obstacles
            curves = leash_curves(self.eff)
            self._leash = (obstacles, geometry.pack_obstacles(obstacles), curves)
        return self._leash

    def straight_clear(self, a, b):
        return _kernels.segment_clear_packed(a[0], a[1], b[0], b[1], self.rings, TOL)


# ---------------------------------------------------------------------------
# definitions 1-3: straightness and crossing counts
# ---------------------------------------------------------------------------


def _straightness_verdict(path):
    dev = geometry.hausdorff_to_segment(path, path.start, path.end)
    if dev <= TOL * max(1.0, path.length):
        return verdict_n()
    devs = [
        geometry._param_on_segment(p, path.start, path.end) for p in path.vertices
    ]
    k = int(
        np.argmax(
            [
                np.linalg.norm(
                    path.start + t * (path.end - path.start) - p
                )
                for t, p in zip(devs, path.vertices)
            ]
        )
    )
    return verdict_e({"bend_vertex": [float(x) for x in path.vertices[k]], "deviation": dev})


def _def1_taut_straight(ctx):
    if ctx.projected:
        return verdict_na("3d-projection")
    if not ctx.focus.taut:
        return verdict_na("C1")
    return _straightness_verdict(ctx.path)


def _def2_taut_straight_multi(ctx):
    if ctx.projected:
        return verdict_na("3d-projection")
    if not ctx.focus.taut:
        return verdict_na("C1")
    if not ctx.scenario.is_multi_robot:
        return verdict_na("C2")
    if ctx.scenario.environment.obstacles:
        return verdict_na("C3")
    return _straightness_verdict(ctx.path)


def _def3_crossing_count(ctx):
    if not ctx.scenario.is_multi_robot:
        return verdict_na("C2")
    word = reduce_word(Word(tuple(l for _, l in ctx.events)))
    counts = {}
    for letter in word.letters:
        if letter.curve.startswith("r"):
            rid = letter.curve.split(".")[0][1:]
            counts.setdefault(rid, []).append(str(letter))
    for rid, letters in sorted(counts.items()):
        if len(letters) >= 2:
            return verdict_e({"robot": rid, "letters": letters})
    return verdict_n()


# ---------------------------------------------------------------------------
# definitions 4-5: loops
# ---------------------------------------------------------------------------


def _word_between(events, s1, s2):
    letters = tuple(l for s, l in events if s1 + 1e-12 < s < s2 - 1e-12 and _is_homotopy_letter(l))
    return reduce_word(Word(letters))


def _def4_loops_null(ctx, path=None, events=None):
    if ctx.projected:
        return verdict_na("C4")
    path = ctx.path if path is None else path
    events = ctx.events if events is None else events
    pairs = geometry.self_intersections(path)
    if path.is_closed():
        # the coinciding endpoints form a loop too, even though the
        # geometric report excludes that pair by convention
        pairs = pairs + [(0.0, 1.0, path.start)]
    for s1, s2, p in pairs:
        w = _word_between(events, s1, s2)
        if w.letters:
            return verdict_e(
                {"loop": [float(s1), float(s2)], "point": [float(p[0]), float(p[1])], "word": word_str(w)}
            )
    return verdict_n()


def _def5_closed_null(ctx):
    if ctx.projected:
        return verdict_na("3d-projection")
    if not ctx.path.is_closed():
        return verdict_na("C5")
    w = ctx.h_word()
    if w.letters:
        return verdict_e({"word": word_str(w)})
    return verdict_n()


# ---------------------------------------------------------------------------
# definitions 6-7: hull and retraction sweeps
# ---------------------------------------------------------------------------


def _def6_hull_clear(ctx, path=None):
    if ctx.projected:
        return verdict_na("3d-projection")
    path = ctx.path if path is None else path
    hull = geometry.convex_hull(path.vertices)
    if len(hull) < 3:
        return verdict_n()
    hull_poly = geometry.Polygon(hull)
    for k, obs in enumerate(ctx.obstacles):
        if geometry.polygon_interiors_intersect(hull_poly, obs):
            return verdict_e({"obstacle": k, "hull": [[float(x), float(y)] for x, y in hull]})
    return verdict_n()


def _triangle_blocked(p, q, a, obstacles):
    area = abs(
        (q[0] - p[0]) * (a[1] - p[1]) - (q[1] - p[1]) * (a[0] - p[0])
    )
    if area <= TOL * 10:
        return not (
            geometry.segment_clear((p, a), obstacles)
            and geometry.segment_clear((q, a), obstacles)
        )
    tri = geometry.Polygon([p, q, a])
    return any(geometry.polygon_interiors_intersect(tri, obs) for obs in obstacles)


def _def7_linear_retraction(ctx, path=None):
    if ctx.projected:
        return verdict_na("3d-projection")
    path = ctx.path if path is None else path
    anchor = path.start
    v = path.vertices
    for k in range(len(v) - 1):
        if _triangle_blocked(v[k], v[k + 1], anchor, ctx.obstacles):
            return verdict_e({"triangle_index": k, "segment": [v[k].tolist(), v[k + 1].tolist()]})
    return verdict_n()


# ---------------------------------------------------------------------------
# definition 8: reachable safe class
# ---------------------------------------------------------------------------

SAFE_TARGET_DIRECTIONS = 64
SAFE_TARGET_LENGTHS = 16


def _def8_safe_reach(ctx, params=None):
    if ctx.projected:
        return verdict_na("3d-projection")
    params = params or ctx.params
    x_a = ctx.path.start
    x_r = ctx.path.end
    focus_word = ctx.h_word()
    env = ctx.scenario.environment

    def qualifies(x, lam_word):
        # straight safe representatives to x all share the class of the
        # direct segment, so relative homotopy along the connector reduces
        # to one word comparison
        if not ctx.straight_clear(x_a, x):
            return False
        target_word = signature_of_segment(x_a, x, ctx.h_curves)
        return concat_words(focus_word, lam_word).letters == target_word.letters

    if qualifies(x_r, EMPTY_WORD):
        return verdict_n({"target": [float(x_r[0]), float(x_r[1])], "path_length": 0.0})
    if params.d_max > 0:
        for kd in range(SAFE_TARGET_DIRECTIONS):
            ang = 2.0 * math.pi * kd / SAFE_TARGET_DIRECTIONS
            d = np.array([math.cos(ang), math.sin(ang)])
            for kl in range(1, SAFE_TARGET_LENGTHS + 1):
                t = params.d_max * kl / SAFE_TARGET_LENGTHS
                x = x_r + t * d
                if np.any(x <= env.lo) or np.any(x >= env.hi):
                    break
                if not ctx.straight_clear(x_r, x):
                    break
                lam_word = signature_of_segment(x_r, x, ctx.h_curves)
                if qualifies(x, lam_word):
                    return verdict_n({"target": [float(x[0]), float(x[1])], "path_length": float(t)})
    return verdict_e(
        {
            "note": "sampling-limit",
            "targets_tried": SAFE_TARGET_DIRECTIONS * SAFE_TARGET_LENGTHS + 1,
            "d_max": params.d_max,
        }
    )


# ---------------------------------------------------------------------------
# definition 9: local visibility homotopy
# ---------------------------------------------------------------------------


def _sample_params(path, samples_per_unit):
    count = max(2, int(math.ceil(path.length * samples_per_unit)))
    params = np.concatenate(
        [np.linspace(0.0, 1.0, count + 1), path.cumlen / max(path.length, TOL)]
    )
    params = np.unique(np.round(params, 12))
    return params[(params >= 0.0) & (params <= 1.0)]


def _def9_local_visibility(ctx, path=None, params=None, samples_per_unit=None):
    params = params or ctx.params
    beta = ctx.projected or params.beta_mode == "len-subpath"
    path = ctx.path if path is None else path
    spu = samples_per_unit or params.samples_per_unit
    if beta:
        spu = min(spu, 4)
    sp = _sample_params(path, spu)
    pts = np.array([path.point_at(s) for s in sp])
    n = len(pts)
    vis = _kernels.pairwise_visibility(
        np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1]), ctx.rings, TOL
    )
    curves = ctx.h_curves.curves
    # every path vertex is a sample, so sign changes of the nudged side
    # values between consecutive samples enumerate the crossing events;
    # subpath and sight-line words then share one convention at the samples
    signs = np.zeros((len(curves), n), dtype=np.int8)
    sides_all = np.zeros((len(curves), n))
    for c, curve in enumerate(curves):
        d = curve.p1 - curve.p0
        nrm = float(np.linalg.norm(d))
        sides = d[0] * (pts[:, 1] - curve.p0[1]) - d[1] * (pts[:, 0] - curve.p0[0])
        eps = TOL * max(1.0, nrm)
        sides = np.where(np.abs(sides) <= eps, eps, sides)
        sides_all[c] = sides
        signs[c] = np.sign(sides).astype(np.int8)
    raw_events = []
    for c, curve in enumerate(curves):
        d = curve.p1 - curve.p0
        nrm2 = float(d @ d)
        for k in np.nonzero(signs[c, :-1] != signs[c, 1:])[0]:
            t = sides_all[c, k] / (sides_all[c, k] - sides_all[c, k + 1])
            x = pts[k] + t * (pts[k + 1] - pts[k])
            u = float((x - curve.p0) @ d) / nrm2
            if u < -1e-12:
                continue
            if curve.closed_end:
                if u > 1.0 + 1e-12:
                    continue
            elif u >= 1.0:
                continue
            sign = 1 if sides_all[c, k] < 0 else -1
            raw_events.append((int(k), float(t), homotopy.Letter(curve.letter, sign)))
    raw_events.sort(key=lambda e: (e[0], e[1]))
    flat_letters = [l for _, _, l in raw_events]
    cum = np.zeros(n, dtype=np.int64)
    np.add.at(cum, [k + 1 for k, _, _ in raw_events], 1)
    cum = np.cumsum(cum)
    if len(curves):
        differs = (signs[:, :, None] != signs[:, None, :]).any(axis=0)
    else:
        differs = np.zeros((n, n), dtype=bool)
    sub_changes = cum[:, None] != cum[None, :]
    candidates = np.triu(vis & (differs | sub_changes), 1)
    carr = _CurveArrays(curves)
    for i, j in np.argwhere(candidates):
        w_sub = reduce_word(Word(tuple(flat_letters[cum[i] : cum[j]])))
        w_line = carr.straight_word(pts[i], pts[j], sides_all[:, i], sides_all[:, j])
        if w_sub.letters != w_line.letters:
            return verdict_e(
                {
                    "pair": [float(sp[i]), float(sp[j])],
                    "points": [pts[i].tolist(), pts[j].tolist()],
                    "subpath_word": word_str(w_sub),
                    "segment_word": word_str(w_line),
                }
            )
    if beta:
        beta_pairs = [(int(i), int(j)) for i, j in np.argwhere(np.triu(vis, 1))]
        verdict = _beta_leash_check(ctx, path, sp, pts, beta_pairs)
        if verdict is not None:
            return verdict
    return verdict_n()


class _CurveArrays:
    """Stacked curve geometry for vectorized straight-segment words."""

    def __init__(self, curves):
        self.curves = curves
        if curves:
            self.p0 = np.array([c.p0 for c in curves])
            self.d = np.array([c.p1 - c.p0 for c in curves])
            self.nrm2 = (self.d * self.d).sum(axis=1)
            self.u_hi = np.where([c.closed_end for c in curves], 1.0 + 1e-12, 1.0)
            self.open_end = np.array([not c.closed_end for c in curves])

    def straight_word(self, p, q, sides_p, sides_q):
        if not self.curves:
            return EMPTY_WORD
        crossing = (sides_p > 0) != (sides_q > 0)
        if not crossing.any():
            return EMPTY_WORD
        idx = np.nonzero(crossing)[0]
        t = sides_p[idx] / (sides_p[idx] - sides_q[idx])
        x = p + t[:, None] * (q - p)
        u = ((x - self.p0[idx]) * self.d[idx]).sum(axis=1) / self.nrm2[idx]
        ok = (u >= -1e-12) & (u <= self.u_hi[idx]) & ~(self.open_end[idx] & (u >= 1.0))
        if not ok.any():
            return EMPTY_WORD
        order = np.argsort(t[ok], kind="stable")
        kept = idx[ok][order]
        signs = np.where(sides_p[kept] < 0, 1, -1)
        letters = tuple(
            homotopy.Letter(self.curves[c].letter, int(s)) for c, s in zip(kept, signs)
        )
        if len(letters) < 2:
            return Word(letters, reduced=True)
        return reduce_word(Word(letters))


def _beta_leash_check(ctx, path, sp, pts, pairs):
    """Projected-scenario leash bound: deformation onto the sight line must
    not need a leash longer than the subpath."""
    obstacles, rings, curves = ctx.leash_setup()
    cls = _kernels.point_classes(
        np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1]), rings, TOL
    )
    for i, j in pairs:
        if cls[i] == 2 or cls[j] == 2:
            continue
        # the leash bound is only meaningful when the subpath and the sight
        # line both avoid the inflated tethers; crossing pairs correspond to
        # passage at a different depth and carry no leash obstruction
        if not _kernels.segment_clear_packed(
            pts[i][0], pts[i][1], pts[j][0], pts[j][1], rings, TOL
        ):
            continue
        try:
            sub = path.slice(sp[i], sp[j])
        except geometry.GeometryError:
            continue
        if not geometry.polyline_clear(sub, obstacles, rings=rings):
            continue
        straight = Polyline([pts[i], pts[j]]) if np.linalg.norm(pts[j] - pts[i]) > TOL else None
        if straight is None:
            continue
        bound = homotopy.homotopic_frechet_upper(
            sub, straight, obstacles, curves, n=8, rings=rings, cell_bound="backtrack"
        )
        if bound > sub.length + 1e-9:
            return verdict_e(
                {
                    "pair": [float(sp[i]), float(sp[j])],
                    "points": [pts[i].tolist(), pts[j].tolist()],
                    "leash_bound": float(bound),
                    "subpath_length": float(sub.length),
                }
            )
    return None


# ---------------------------------------------------------------------------
# definitions 10-11: relaxations
# ---------------------------------------------------------------------------

BASE_EVALUATORS = {}  # filled below


def _candidate_paths(ctx):
    """Finite deformation ladder: the path itself, its taut representative,
    and taut blends that keep a few original vertices."""
    yield "original", ctx.path
    try:
        taut = ctx.taut_rep()
    except ClassSearchOverflow:
        return
    yield "taut", taut
    n_v = len(ctx.path.vertices)
    h_events = [(s, l) for s, l in ctx.events if _is_homotopy_letter(l)]
    for keep in (2, 4, 8):
        if keep >= n_v - 1:
            break
        idx = np.unique(np.round(np.linspace(0, n_v - 1, keep + 2)).astype(int))
        try:
            pieces = []
            for a, b in zip(idx[:-1], idx[1:]):
                s1 = ctx.path.param_of_vertex(int(a))
                s2 = ctx.path.param_of_vertex(int(b))
                word = _word_between(h_events, s1, s2)
                pieces.append(
                    homotopy.taut_path_in_class(
                        ctx.path.vertices[a],
                        ctx.path.vertices[b],
                        word,
                        ctx.obstacles,
                        ctx.h_curves,
                        rings=ctx.rings,
                    )
                )
            blend = pieces[0]
            for piece in pieces[1:]:
                if piece.length <= TOL:
                    continue
                if blend.length <= TOL:
                    blend = piece
                    continue
                blend = geometry.concatenate(blend, piece)
            yield f"blend{keep}", blend
        except (ClassSearchOverflow, geometry.GeometryError):
            continue


def _def10_relaxed(ctx, params=None):
    params = params or ctx.params
    base = params.relaxed_base
    evaluator = BASE_EVALUATORS.get(base)
    if evaluator is None:
        return verdict_na(f"error:unsupported-base-{base}")
    focus_word = ctx.h_word()
    delta = params.delta
    leash = None
    tried = 0
    for name, cand in _candidate_paths(ctx):
        tried += 1
        if cand.length <= TOL and not ctx.path.is_closed():
            continue
        cand_word = (
            focus_word
            if name == "original"
            else reduce_word(Word(tuple(l for _, l in ctx.h_events(cand))))
        )
        if cand_word.letters != focus_word.letters:
            continue
        base_verdict = evaluator(ctx, path=cand)
        if not base_verdict.not_entangled:
            continue
        if math.isinf(delta):
            return verdict_n({"candidate": name})
        if name == "original":
            return verdict_n({"candidate": name, "leash_bound": 0.0})
        if leash is None:
            leash = ctx.leash_setup()
        obstacles, rings, curves = leash
        bound = homotopy.homotopic_frechet_upper(
            ctx.path, cand, obstacles, curves, n=16, rings=rings
        )
        if bound <= delta + 1e-9:
            return verdict_n({"candidate": name, "leash_bound": float(bound)})
    return verdict_e({"note": "sampling-limit", "candidates_tried": tried, "delta": delta})


def _def11_class_relaxed(ctx):
    try:
        taut = ctx.taut_rep()
    except ClassSearchOverflow:
        return verdict_na("error:class-search-overflow")
    if taut.length <= TOL:
        # a contractible closed tether relaxes to the anchor point
        return verdict_n({"representative": "point"})
    return _def9_base(ctx, path=taut)


def _memoized(ctx, key, thunk):
    if key not in ctx.memo:
        ctx.memo[key] = thunk()
    return ctx.memo[key]


def _def4_base(ctx, path=None):
    if path is None or path is ctx.path:
        return _memoized(ctx, "def4", lambda: _def4_loops_null(ctx))
    return _def4_loops_null(ctx, path=path, events=ctx.h_events(path))


def _def9_base(ctx, path=None):
    if path is None or path is ctx.path:
        return _memoized(ctx, "def9", lambda: _def9_local_visibility(ctx))
    if ctx._taut is not None and path is ctx._taut:
        return _memoized(ctx, "def9@taut", lambda: _def9_local_visibility(ctx, path=path))
    return _def9_local_visibility(ctx, path=path)


def _def6_base(ctx, path=None):
    if path is None or path is ctx.path:
        return _memoized(ctx, "def6", lambda: _def6_hull_clear(ctx))
    return _def6_hull_clear(ctx, path=path)


def _def7_base(ctx, path=None):
    if path is None or path is ctx.path:
        return _memoized(ctx, "def7", lambda: _def7_linear_retraction(ctx))
    return _def7_linear_retraction(ctx, path=path)


BASE_EVALUATORS.update({4: _def4_base, 6: _def6_base, 7: _def7_base, 9: _def9_base})


# ---------------------------------------------------------------------------
# dispatcher
# ---------------------------------------------------------------------------

_EVALUATORS = {
    1: _def1_taut_straight,
    2: _def2_taut_straight_multi,
    3: _def3_crossing_count,
    4: _def4_base,
    5: _def5_closed_null,
    6: lambda ctx: _def6_base(ctx),
    7: lambda ctx: _def7_base(ctx),
    8: _def8_safe_reach,
    9: _def9_base,
    10: _def10_relaxed,
    11: _def11_class_relaxed,
}


def evaluate(scenario_or_ctx, def_id):
    ctx = (
        scenario_or_ctx
        if isinstance(scenario_or_ctx, ScenarioContext)
        else ScenarioContext(scenario_or_ctx)
    )
    if def_id not in _EVALUATORS:
        raise ValueError(f"unknown definition id {def_id}")
    return _EVALUATORS[def_id](ctx)


def evaluate_all(scenario):
    """Ordered verdicts for definitions 1-11 with applicability gating."""
    ctx = ScenarioContext(scenario)
    results = []
    for def_id in DEFINITION_IDS:
        try:
            results.append((def_id, _EVALUATORS[def_id](ctx)))
        except (HomotopyError, geometry.GeometryError) as exc:
            log.warning("definition %d failed on %s: %s", def_id, scenario.id, exc)
            name = type(exc).__name__
            results.append((def_id, verdict_na(f"error:{name}")))
    return results
