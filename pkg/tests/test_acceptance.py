"""Acceptance suite: one test per criterion, each printing a pass line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines live.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from tetherkit import _kernels
from tetherkit import geometry as g
from tetherkit import homotopy as h
from tetherkit import workspace_map as wm
from tetherkit.definitions import ScenarioContext, _def9_local_visibility, evaluate_all
from tetherkit.environment import (
    Environment,
    Scenario,
    TetherConfig,
    _validate_scenario,
    render_scenario,
)
from tetherkit.geometry import Polygon, Polyline
from tetherkit.relations import GenParams, random_scenario, run_matrix

from conftest import square
from test_geometry import (
    orient_exact,
    point_in_polygon_exact,
    segment_intersection_exact,
)


@pytest.fixture(scope="module", autouse=True)
def warm_kernels():
    # compile the jit kernels outside the timed budgets
    rings = g.pack_obstacles([square(0, 0, 1, 1)])
    _kernels.point_class(0.5, 0.5, rings, 1e-9)
    _kernels.segment_clear_packed(-1, 0.5, 2, 0.5, rings, 1e-9)
    _kernels.pairwise_visibility(np.array([0.0, 2.0]), np.array([0.0, 2.0]), rings, 1e-9)
    _kernels.point_classes(np.array([0.5]), np.array([0.5]), rings, 1e-9)
    _kernels.visibility_from(0.0, 0.0, np.array([2.0]), np.array([2.0]), rings, 1e-9)
    _kernels.reach_dilation(
        np.array([2.0]), np.array([2.0]), np.array([0.0]), np.array([0.0]), 9.0, rings, 1e-9
    )
    _kernels.word_reduction_check(2, 2)


def _passline(n, text):
    print(f"[criterion {n}] PASS: {text}")


# ---------------------------------------------------------------------------
# criterion 1: figure-level verdicts
# ---------------------------------------------------------------------------


def test_criterion_1_figure_verdicts(corpus):
    t0 = time.time()
    rows = {name: dict(evaluate_all(s)) for name, s in corpus.items()}
    # (a) retraction-clear but hull-blocked configuration
    assert rows["hull_vs_retraction"][7].state == "N"
    assert rows["hull_vs_retraction"][6].state == "E"
    # (b) safe-class reachability splits the two configurations
    assert rows["safe_reach_ok"][8].state == "N"
    assert rows["safe_reach_blocked"][8].state == "E"
    # (c) local visibility splits the under/over configurations
    assert rows["visibility_under"][9].state == "N"
    assert rows["visibility_over"][9].state == "E"
    # (d) the spur perturbation flips the strict verdict but not the
    # class-relaxed one
    assert rows["gap_spur_base"][9].state == "N"
    assert rows["gap_spur_bump"][9].state == "E"
    assert rows["gap_spur_base"][11].state == "N"
    assert rows["gap_spur_bump"][11].state == "N"
    elapsed = time.time() - t0
    assert elapsed < 5.0, f"figure verdicts took {elapsed:.1f}s"
    _passline(1, f"figure verdicts exact in {elapsed:.2f}s")


# ---------------------------------------------------------------------------
# criterion 2: implication matrix
# ---------------------------------------------------------------------------


def test_criterion_2_implication_matrix():
    t0 = time.time()
    report = run_matrix(GenParams(), 1000)
    elapsed = time.time() - t0
    assert report.violated_pairs == [], report.violated_pairs
    marked_checked = sum(
        1 for (a, b), st in report.pairs.items() if st.marked and st.applicable > 0
    )
    witnessed = report.witnessed_unmarked
    assert len(witnessed) >= 8, witnessed
    assert elapsed < 600.0, f"matrix run took {elapsed:.0f}s"
    _passline(
        2,
        f"0 violations on {marked_checked} exercised marked pairs over "
        f"{report.generated} trials; {len(witnessed)} unmarked pairs separated; "
        f"{elapsed:.0f}s",
    )


# ---------------------------------------------------------------------------
# criterion 3: workspace propositions
# ---------------------------------------------------------------------------


def _proposition_envs():
    return [
        ("empty", Environment((0, 0), (10, 10), []), (2.0, 5.0)),
        ("one-box", Environment((0, 0), (10, 10), [square(4, 4, 6, 6)]), (2.0, 5.0)),
        (
            "two-boxes",
            Environment((0, 0), (10, 10), [square(2.5, 5.5, 4.5, 7.5), square(6, 2, 8, 4)]),
            (1.0, 1.0),
        ),
        (
            "corridor",
            Environment((0, 0), (10, 10), [square(3, 0.5, 4, 6.5), square(6, 3.5, 7, 9.5)]),
            (1.0, 5.0),
        ),
        (
            "triangle-mix",
            Environment(
                (0, 0),
                (10, 10),
                [Polygon([(5, 4.5), (7, 5.5), (5.5, 7)]), square(1.5, 7, 3, 8.5)],
            ),
            (8.5, 1.5),
        ),
    ]


def test_criterion_3_inclusion_chain():
    t0 = time.time()
    cells = 200
    for name, env, anchor in _proposition_envs():
        maps = {}
        for d in (1, 2, 6, 7):
            maps[d] = wm.map_visibility(env, anchor, cells=cells, definition=d)
        for d in (4, 9):
            maps[d] = wm.map_full_free(env, cells=cells, definition=d)
        maps[8] = wm.map_safe_reach(env, anchor, 2.0, cells=cells)
        report = wm.check_inclusion_chain(maps)
        assert report["ok"], (name, report)
        if name == "empty":
            for d in (2, 6, 7, 8, 4, 9):
                assert np.array_equal(maps[1].grid, maps[d].grid), d
    elapsed = time.time() - t0
    assert elapsed < 120.0, f"proposition suite took {elapsed:.0f}s"
    _passline(3, f"inclusion chain clean on 5 environments at {cells}x{cells} in {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# criterion 4: shortest paths always satisfy local visibility
# ---------------------------------------------------------------------------


def test_criterion_4_shortest_paths_pass_local_visibility():
    t0 = time.time()
    rng = np.random.default_rng(472)
    total = 0
    envs = 0
    while total < 1000:
        gp = GenParams(seed=472 + envs, obstacle_count=(1, 2), p_multi=0.0, p_taut=0.0, p_closed=0.0)
        scenario = random_scenario(gp, envs)
        envs += 1
        ctx = ScenarioContext(scenario)
        env = scenario.environment
        pairs_here = 0
        while pairs_here < 25 and total < 1000:
            p = rng.uniform(env.lo + 0.2, env.hi - 0.2, size=(2, 2))
            if _kernels.point_class(p[0][0], p[0][1], env.rings, 1e-9) == 2:
                continue
            if _kernels.point_class(p[1][0], p[1][1], env.rings, 1e-9) == 2:
                continue
            if np.linalg.norm(p[1] - p[0]) < 0.2:
                continue
            path = h.shortest_path(p[0], p[1], env.obstacles, rings=env.rings)
            if path.length <= 1e-9:
                continue
            verdict = _def9_local_visibility(ctx, path=path)
            assert verdict.not_entangled, (scenario.id, p.tolist(), verdict.witness)
            pairs_here += 1
            total += 1
    elapsed = time.time() - t0
    _passline(4, f"{total} shortest paths all pass local visibility in {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# criterion 5: signature algebra
# ---------------------------------------------------------------------------


def test_criterion_5_signature_algebra():
    t0 = time.time()
    # word algebra exhaustively up to length 8 over 3 letters
    assert _kernels.word_reduction_check(8, 3) == 0
    env = Environment((0, 0), (10, 10), [square(2, 4, 3.5, 6), square(6.5, 4, 8, 6)])
    from tetherkit.environment import EffectiveEnvironment, representative_curves

    curves = representative_curves(EffectiveEnvironment(base=env, dimension="2D"))
    rng = np.random.default_rng(55)
    # concatenation and reversal over 1000 random path pairs
    done = 0
    while done < 1000:
        pts = rng.uniform(0.3, 9.7, size=(5, 2))
        try:
            l1 = Polyline(pts[:3])
            l2 = Polyline(pts[2:])
        except g.GeometryError:
            continue
        cat = h.signature(g.concatenate(l1, l2), curves)
        want = h.concat_words(h.signature(l1, curves), h.signature(l2, curves))
        assert cat.letters == want.letters
        rev = h.signature(l1.reversed(), curves)
        assert rev.letters == h.inverse_word(h.signature(l1, curves)).letters
        done += 1
    # spur invariance over 1000 perturbations
    base = Polyline([(0.5, 0.5), (5, 1), (9.5, 0.5), (9.5, 9), (5, 8.5), (0.5, 9)])
    w0 = h.signature(base, curves)
    inserted = 0
    while inserted < 1000:
        k = int(rng.integers(0, len(base.vertices) - 1))
        t = rng.uniform(0.2, 0.8)
        p = (1 - t) * base.vertices[k] + t * base.vertices[k + 1]
        q = rng.uniform(0.2, 9.8, size=2)
        if np.linalg.norm(q - p) < 1e-3:
            continue
        if not g.segment_clear((p, q), env.obstacles, rings=env.rings):
            continue
        verts = np.concatenate([base.vertices[: k + 1], [p, q, p], base.vertices[k + 1 :]])
        try:
            spurred = Polyline(verts)
        except g.GeometryError:
            continue
        assert h.signature(spurred, curves).letters == w0.letters
        inserted += 1
    elapsed = time.time() - t0
    _passline(
        5,
        "reduction idempotent and cancellation-order independent for all "
        "words to length 8 on 3 letters; 1000 concatenation/reversal pairs "
        f"and 1000 spur insertions invariant; {elapsed:.0f}s",
    )


# ---------------------------------------------------------------------------
# criterion 6: geometric kernel oracles
# ---------------------------------------------------------------------------


def test_criterion_6_kernel_oracles():
    t0 = time.time()
    rng = np.random.default_rng(66)
    mismatches = 0
    for p, q, r in rng.uniform(-5, 5, size=(10_000, 3, 2)):
        got = g.orient(p, q, r)
        want = orient_exact(p, q, r)
        if got != want and got != 0:
            mismatches += 1
    assert mismatches == 0
    for _ in range(10_000):
        a1, b1, a2, b2 = rng.uniform(-2, 2, size=(4, 2))
        got = g.segment_intersection((a1, b1), (a2, b2))
        want = segment_intersection_exact(a1, b1, a2, b2)
        if (got is None) != (want is None):
            mismatches += 1
        elif got is not None and got[0] != want[0]:
            mismatches += 1
    assert mismatches == 0
    poly = Polygon([(0, 0), (4, 1), (5, 4), (2, 5.5), (-1, 3)])
    for p in rng.uniform(-2, 6, size=(10_000, 2)):
        got = g.point_in_polygon(p, poly)
        want = point_in_polygon_exact(p, poly.vertices)
        if got != want and "boundary" not in (got, want):
            mismatches += 1
    assert mismatches == 0
    hull_cases = 0
    for _ in range(50):
        pts = rng.uniform(-3, 3, size=(200, 2))
        hull = g.convex_hull(pts)
        n = len(hull)
        for i in range(n):
            assert g.orient(hull[i], hull[(i + 1) % n], hull[(i + 2) % n]) == 1
            for p in pts:
                assert orient_exact(hull[i], hull[(i + 1) % n], p) >= 0
                hull_cases += 1
    elapsed = time.time() - t0
    _passline(
        6,
        f"0 mismatches over 10^4 orientation, 10^4 intersection, 10^4 "
        f"containment cases and {hull_cases} hull half-plane checks; {elapsed:.0f}s",
    )


# ---------------------------------------------------------------------------
# criterion 7: leash bound sanity
# ---------------------------------------------------------------------------


def test_criterion_7_leash_bound():
    t0 = time.time()
    empty_curves = h.RepresentativeCurves(np.array([0.0, 1.0]), ())
    line = Polyline([(0, 0), (3, 1), (6, 0)])
    assert h.homotopic_frechet_upper(line, line, [], empty_curves, n=32) == 0.0
    n = 64
    a = Polyline([(0, 0), (4, 0)])
    b = Polyline([(0, 2.5), (4, 2.5)])
    bound = h.homotopic_frechet_upper(a, b, [], empty_curves, n=n)
    assert abs(bound - 2.5) <= 4.0 / n + 1e-12
    # never below the discrete straight-leash bound on the same grid
    env = Environment((0, 0), (10, 10), [square(4, 4, 6, 6)])
    from tetherkit.environment import EffectiveEnvironment, representative_curves

    curves = representative_curves(EffectiveEnvironment(base=env, dimension="2D"))
    p1 = Polyline([(2, 2), (2, 8)])
    p2 = Polyline([(8, 2), (8, 8)])
    m = 8
    bound = h.homotopic_frechet_upper(p1, p2, env.obstacles, curves, n=m)
    params = np.linspace(0, 1, m + 1)
    pts1 = np.array([p1.point_at(s) for s in params])
    pts2 = np.array([p2.point_at(s) for s in params])
    d = np.linalg.norm(pts1[:, None, :] - pts2[None, :, :], axis=2)
    dp = np.full((m + 1, m + 1), np.inf)
    dp[0, 0] = d[0, 0]
    for i in range(m + 1):
        for j in range(m + 1):
            if i == 0 and j == 0:
                continue
            prior = min(
                dp[i - 1, j] if i else np.inf,
                dp[i, j - 1] if j else np.inf,
                dp[i - 1, j - 1] if i and j else np.inf,
            )
            dp[i, j] = max(d[i, j], prior)
    assert bound >= dp[m, m] - 1e-9
    detour = h.shortest_path((2, 5), (8, 5), env.obstacles).length
    assert bound >= detour - 1e-9
    elapsed = time.time() - t0
    _passline(
        7,
        f"identity bound 0, parallel case within grid error, obstacle case "
        f">= straight-leash and detour bounds; {elapsed:.0f}s",
    )


# ---------------------------------------------------------------------------
# criterion 8: corpus classification determinism
# ---------------------------------------------------------------------------


def test_criterion_8_corpus_determinism(tmp_path):
    from click.testing import CliRunner

    from tetherkit.cli import main

    t0 = time.time()
    corpus = tmp_path / "corpus50"
    corpus.mkdir()
    gp = GenParams()
    written = 0
    index = 0
    while written < 50:
        try:
            scenario = random_scenario(gp, index)
        except Exception:
            index += 1
            continue
        (corpus / f"auto{written:03d}.json").write_bytes(render_scenario(scenario))
        written += 1
        index += 1
    runner = CliRunner()
    outputs = []
    plans = [1, 1, 1, 8, 8]
    for k, threads in enumerate(plans):
        out = tmp_path / f"run{k}"
        result = runner.invoke(
            main,
            ["classify", "--corpus", str(corpus), "--out", str(out), "--threads", str(threads)],
        )
        assert result.exit_code == 0, result.output
        outputs.append(
            (out / "verdicts.csv").read_bytes() + (out / "verdicts.md").read_bytes()
        )
    assert all(o == outputs[0] for o in outputs)
    elapsed = time.time() - t0
    _passline(
        8,
        f"50-scenario corpus classified byte-identically across 5 runs and "
        f"thread counts {{1, 8}}; {elapsed:.0f}s",
    )
