"""Randomized scenario generation and empirical implication checking.

The marked implication table records which definition's non-entanglement
verdict is known to force another's.  A trial pool of generated scenarios
is evaluated once and every marked ordered pair is checked for violations;
unmarked pairs are scanned for separating witnesses.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry, homotopy
from .definitions import DEFINITION_IDS, evaluate_all
from .environment import (
    DefinitionParams,
    Environment,
    Scenario,
    ScenarioError,
    TetherConfig,
    _validate_scenario,
)
from .geometry import Polygon, Polyline

# row implies column; verdicts N on the row force N on the column whenever
# both definitions are applicable.  (4, 11) additionally needs a closed
# tether.
MARKED_IMPLICATIONS = (
    (1, 4), (1, 6), (1, 7), (1, 9), (1, 11),
    (2, 1), (2, 3), (2, 4), (2, 5), (2, 6), (2, 7), (2, 9), (2, 11),
    (4, 5), (4, 11),
    (5, 4), (5, 11),
    (6, 1), (6, 4), (6, 5), (6, 7), (6, 9), (6, 11),
    (7, 4), (7, 5), (7, 11),
    (9, 4), (9, 5), (9, 11),
)

EXTRA_CONDITIONS = {(4, 11): "closed"}

DEFAULT_SEED = 0xC0FFEE


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GenParams:
    seed: int = DEFAULT_SEED
    obstacle_count: tuple = (0, 3)
    obstacle_vertices: tuple = (3, 7)
    waypoints: tuple = (1, 5)
    p_taut: float = 0.2
    p_closed: float = 0.15
    p_multi: float = 0.25
    bounds: tuple = ((0.0, 0.0), (10.0, 10.0))

    def __post_init__(self):
        for lo, hi in (self.obstacle_count, self.obstacle_vertices, self.waypoints):
            if hi < lo:
                raise ValueError("empty generator range")
        for p in (self.p_taut, self.p_closed, self.p_multi):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")


def _random_obstacle(rng, lo, hi, nv_range):
    margin = 1.4
    center = rng.uniform(lo + margin, hi - margin)
    rho = rng.uniform(0.45, 1.05)
    nv = int(rng.integers(nv_range[0], nv_range[1] + 1))
    for _ in range(12):
        angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, nv))
        if nv > 2 and np.min(np.diff(np.concatenate([angles, [angles[0] + 2 * math.pi]]))) < 0.35:
            continue
        radii = rho * rng.uniform(0.55, 1.25, nv)
        pts = center + np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)
        try:
            return Polygon(pts)
        except geometry.GeometryError:
            continue
    return None


def _obstacles_disjoint(obstacles, candidate, gap=0.35):
    for obs in obstacles:
        if geometry.polygon_interiors_intersect(obs, candidate):
            return False
        va, vb = obs.vertices, candidate.vertices
        for i in range(len(va)):
            a0, a1 = va[i], va[(i + 1) % len(va)]
            for j in range(len(vb)):
                if homotopy._segment_gap(a0, a1, vb[j], vb[(j + 1) % len(vb)]) < gap:
                    return False
    return True


def _random_free_point(rng, env, clearance=0.08, budget=200):
    rings = env.rings
    for _ in range(budget):
        p = rng.uniform(env.lo + 0.2, env.hi - 0.2)
        from . import _kernels

        if _kernels.point_class(p[0], p[1], rings, clearance) == 0:
            return p
    raise GenerationError("no free point found")


def _random_tether(rng, env, anchor, n_waypoints, rings):
    pts = [anchor]
    for _ in range(n_waypoints):
        w = _random_free_point(rng, env)
        last = pts[-1]
        if np.linalg.norm(w - last) < 0.2:
            continue
        if geometry.segment_clear((last, w), env.obstacles, rings=rings):
            pts.append(w)
        else:
            detour = homotopy.shortest_path(last, w, env.obstacles, rings=rings)
            pts.extend(list(detour.vertices[1:]))
    if len(pts) < 2:
        w = _random_free_point(rng, env)
        if geometry.segment_clear((pts[0], w), env.obstacles, rings=rings):
            pts.append(w)
        else:
            detour = homotopy.shortest_path(pts[0], w, env.obstacles, rings=rings)
            pts.extend(list(detour.vertices[1:]))
    keep = [pts[0]]
    for q in pts[1:]:
        if np.linalg.norm(q - keep[-1]) > 1e-9:
            keep.append(q)
    if len(keep) < 2:
        raise GenerationError("degenerate tether")
    return Polyline(np.array(keep))


def _polyline_gap(a, b):
    from .environment import _polyline_min_distance

    return _polyline_min_distance(a, b)


def random_scenario(gp, index):
    """Deterministic scenario draw for (seed, index)."""
    rng = np.random.default_rng(np.random.SeedSequence((gp.seed, index)))
    lo = np.asarray(gp.bounds[0], dtype=np.float64)
    hi = np.asarray(gp.bounds[1], dtype=np.float64)
    multi = rng.random() < gp.p_multi
    taut = rng.random() < gp.p_taut
    closed = (not taut) and rng.random() < gp.p_closed
    n_obs_target = int(rng.integers(gp.obstacle_count[0], gp.obstacle_count[1] + 1))
    if multi and taut:
        # straight taut tethers among tether-only obstacles exercise the
        # obstacle-free multi-robot definitions
        n_obs_target = 0

    for _attempt in range(6):
        obstacles = []
        budget = 40
        while len(obstacles) < n_obs_target and budget > 0:
            budget -= 1
            cand = _random_obstacle(rng, lo, hi, gp.obstacle_vertices)
            if cand is None:
                continue
            if _obstacles_disjoint(obstacles, cand):
                obstacles.append(cand)
        try:
            env = Environment(lo, hi, obstacles)
        except ScenarioError:
            continue
        rings = env.rings
        try:
            anchor = _random_free_point(rng, env)
            n_wp = int(rng.integers(gp.waypoints[0], gp.waypoints[1] + 1))
            path = _random_tether(rng, env, anchor, n_wp, rings)
            if closed:
                back = homotopy.shortest_path(path.end, anchor, env.obstacles, rings=rings)
                if back.length > 1e-9:
                    path = geometry.concatenate(path, back)
            robots = []
            if taut:
                if multi:
                    path = Polyline([anchor, path.end])
                else:
                    ray_items = [(f"z{k + 1}", obs) for k, obs in enumerate(obstacles)]
                    curves = homotopy.build_representative_curves((lo, hi), ray_items, ())
                    path = homotopy.taut_representative(path, obstacles, curves, rings=rings)
                    if path.length <= 1e-9:
                        raise GenerationError("taut tether collapsed")
            robots.append(("r1", TetherConfig(path=path, taut=taut)))
            if multi:
                for _ in range(25):
                    anchor2 = _random_free_point(rng, env)
                    path2 = _random_tether(rng, env, anchor2, max(1, n_wp - 1), rings)
                    if taut:
                        path2 = Polyline([anchor2, path2.end])
                    if _polyline_gap(path, path2) > 0.25:
                        robots.append(("r2", TetherConfig(path=path2, taut=taut)))
                        break
                else:
                    raise GenerationError("no disjoint second tether")
            scenario = Scenario(
                id=f"gen-{gp.seed:x}-{index}",
                dimension="2D",
                environment=env,
                robots=tuple(robots),
                focus="r1",
                params=DefinitionParams(d_max=2.0),
            )
            _validate_scenario(scenario, check_taut=False)
            return scenario
        except (GenerationError, ScenarioError, homotopy.HomotopyError, geometry.GeometryError):
            continue
    raise GenerationError(f"generation budget exhausted for index {index}")


# ---------------------------------------------------------------------------
# implication harness
# ---------------------------------------------------------------------------


@dataclass
class PairStats:
    marked: bool
    applicable: int = 0
    premise: int = 0
    violations: list = field(default_factory=list)
    soft_violations: list = field(default_factory=list)
    witnesses: list = field(default_factory=list)


@dataclass
class ImplicationReport:
    trials: int
    generated: int
    skipped: int
    pairs: dict
    counts: dict

    @property
    def violated_pairs(self):
        return sorted(
            pair for pair, st in self.pairs.items() if st.marked and st.violations
        )

    @property
    def witnessed_unmarked(self):
        return sorted(
            pair for pair, st in self.pairs.items() if not st.marked and st.witnesses
        )


def _is_soft(verdict):
    return verdict.entangled and (verdict.witness or {}).get("note") == "sampling-limit"


def scan_rows(rows):
    """Aggregate implication statistics over evaluated scenario rows.

    rows: iterable of (scenario_id, closed_flag, {def_id: Verdict}).
    """
    pairs = {}
    for a in DEFINITION_IDS:
        for b in DEFINITION_IDS:
            if a != b:
                pairs[(a, b)] = PairStats(marked=(a, b) in MARKED_IMPLICATIONS)
    counts = {d: {"N": 0, "E": 0, "--": 0} for d in DEFINITION_IDS}
    generated = 0
    for sid, closed, verdicts in rows:
        generated += 1
        for d in DEFINITION_IDS:
            counts[d][verdicts[d].state] += 1
        for (a, b), st in pairs.items():
            va, vb = verdicts[a], verdicts[b]
            if not (va.applicable and vb.applicable):
                continue
            if (a, b) in EXTRA_CONDITIONS and EXTRA_CONDITIONS[(a, b)] == "closed" and not closed:
                continue
            st.applicable += 1
            if not va.not_entangled:
                continue
            st.premise += 1
            if vb.entangled:
                if st.marked and _is_soft(vb):
                    st.soft_violations.append(sid)
                elif st.marked:
                    st.violations.append(sid)
                else:
                    st.witnesses.append(sid)
    return pairs, counts, generated


def run_matrix(gp, trials, progress=None):
    """Generate a trial pool, evaluate every definition, check the table."""
    if trials < 1:
        raise ValueError("need at least one trial")
    rows = []
    skipped = 0
    for index in range(trials):
        try:
            scenario = random_scenario(gp, index)
        except GenerationError:
            skipped += 1
            continue
        try:
            verdicts = dict(evaluate_all(scenario))
        except (ScenarioError, homotopy.HomotopyError) as exc:
            skipped += 1
            if progress:
                progress(index, f"skipped ({exc})")
            continue
        rows.append((scenario.id, scenario.focus_tether.path.is_closed(), verdicts))
        if progress:
            progress(index, None)
    pairs, counts, generated = scan_rows(rows)
    return ImplicationReport(
        trials=trials, generated=generated, skipped=skipped, pairs=pairs, counts=counts
    )


def report_to_json(report):
    payload = {
        "trials": report.trials,
        "generated": report.generated,
        "skipped": report.skipped,
        "counts": {str(d): c for d, c in sorted(report.counts.items())},
        "pairs": {
            f"{a}->{b}": {
                "marked": st.marked,
                "applicable": st.applicable,
                "premise": st.premise,
                "violations": st.violations,
                "soft_violations": st.soft_violations,
                "witnesses": st.witnesses[:20],
                "witness_count": len(st.witnesses),
            }
            for (a, b), st in sorted(report.pairs.items())
        },
    }
    return json.dumps(payload, indent=2) + "\n"


def report_to_markdown(report):
    """Row-implies-column matrix: X verified, ! violated, - unmarked."""
    lines = [
        "# Implication matrix",
        "",
        f"Trials requested: {report.trials}; evaluated: {report.generated}; "
        f"skipped: {report.skipped}.",
        "",
        "| row \\ col | " + " | ".join(str(d) for d in DEFINITION_IDS) + " |",
        "|---" * (len(DEFINITION_IDS) + 1) + "|",
    ]
    for a in DEFINITION_IDS:
        cells = []
        for b in DEFINITION_IDS:
            if a == b:
                cells.append("X")
                continue
            st = report.pairs[(a, b)]
            if st.marked:
                if st.violations:
                    cells.append("!")
                elif st.applicable == 0:
                    cells.append("X?")
                else:
                    cells.append("X")
            else:
                cells.append("-")
        lines.append(f"| **{a}** | " + " | ".join(cells) + " |")
    lines.append("")
    lines.append("`X?` marks a vacuous pair: no generated trial satisfied both conditions.")
    lines.append("")
    witnessed = report.witnessed_unmarked
    lines.append(f"Separating witnesses found for {len(witnessed)} unmarked pairs:")
    for a, b in witnessed:
        st = report.pairs[(a, b)]
        lines.append(f"- {a} does not imply {b}: e.g. {st.witnesses[0]} ({len(st.witnesses)} total)")
    soft = [
        (pair, st) for pair, st in sorted(report.pairs.items()) if st.marked and st.soft_violations
    ]
    if soft:
        lines.append("")
        lines.append("Sampling-limited entangled verdicts on marked pairs (logged, not failures):")
        for (a, b), st in soft:
            lines.append(f"- {a}->{b}: {len(st.soft_violations)} trials")
    lines.append("")
    return "\n".join(lines)
