"""Per-definition evaluators on the bundled corpus and synthetic scenarios."""

import json
import math

import numpy as np
import pytest

from tetherkit.definitions import (
    DEFINITION_IDS,
    ScenarioContext,
    evaluate,
    evaluate_all,
)
from tetherkit.environment import DefinitionParams, Scenario, load_scenario

# verdict table for the bundled corpus, one column per definition id
EXPECTED = {
    "hull_vs_retraction": "-- -- -- N -- E N N E N N",
    "safe_reach_ok":      "-- -- -- N -- E E N N N N",
    "safe_reach_blocked": "-- -- -- N -- E E E E E E",
    "visibility_under":   "-- -- -- N -- N N N N N N",
    "visibility_over":    "-- -- -- N -- E E E E E E",
    "gap_spur_base":      "-- -- -- N -- N N N N N N",
    "gap_spur_bump":      "-- -- -- N -- E N N E N N",
    "taut_bent":          "E -- -- N -- E E E N N N",
    "closed_free":        "-- -- -- N N N N N N N N",
    "closed_wrapped":     "-- -- -- E E E E E E E E",
    "deep_wrap":          "-- -- -- N -- E E E E E E",
    "straight_pair_taut": "N N N N -- N N N N N N",
    "crossing_pair_once": "-- -- N -- -- -- -- -- N N N",
    "crossing_pair_wrap": "-- -- E -- -- -- -- -- N N N",
}


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_corpus_verdicts(corpus, name):
    verdicts = dict(evaluate_all(corpus[name]))
    got = " ".join(verdicts[d].state for d in DEFINITION_IDS)
    assert got == EXPECTED[name], f"{name}: {got}"


def test_entangled_verdicts_carry_witnesses(corpus):
    for name, scenario in corpus.items():
        for d, v in evaluate_all(scenario):
            if v.entangled:
                assert v.witness, f"{name} def{d}"
            if not v.applicable:
                assert v.reason, f"{name} def{d}"


def test_applicability_reasons(corpus):
    verdicts = dict(evaluate_all(corpus["hull_vs_retraction"]))
    assert verdicts[1].reason == "C1"
    assert verdicts[2].reason == "C1"
    assert verdicts[3].reason == "C2"
    assert verdicts[5].reason == "C5"
    v3d = dict(evaluate_all(corpus["crossing_pair_once"]))
    assert v3d[4].reason == "C4"
    assert not v3d[6].applicable and not v3d[7].applicable and not v3d[8].applicable


def test_def2_gating_order(corpus):
    verdicts = dict(evaluate_all(corpus["taut_bent"]))
    # taut single-robot scenario with obstacles: multi-robot condition fails
    assert verdicts[2].reason == "C2"


def test_def3_witness_letters(corpus):
    v = dict(evaluate_all(corpus["crossing_pair_wrap"]))[3]
    assert v.entangled
    assert v.witness["robot"] == "r2"
    assert len(v.witness["letters"]) >= 2


def test_def9_witness_is_a_separated_pair(corpus):
    s = corpus["visibility_over"]
    v = dict(evaluate_all(s))[9]
    assert v.entangled
    (s1, s2) = v.witness["pair"]
    assert 0 <= s1 < s2 <= 1
    p1, p2 = np.array(v.witness["points"][0]), np.array(v.witness["points"][1])
    # the witness pair is mutually visible
    from tetherkit.geometry import segment_clear

    assert segment_clear((p1, p2), s.environment.obstacles)


def test_def1_witness_bend(corpus):
    v = dict(evaluate_all(corpus["taut_bent"]))[1]
    assert v.entangled
    assert "bend_vertex" in v.witness


def test_def8_records_target(corpus):
    v = dict(evaluate_all(corpus["safe_reach_ok"]))[8]
    assert v.not_entangled
    assert "target" in v.witness
    v2 = dict(evaluate_all(corpus["safe_reach_blocked"]))[8]
    assert v2.entangled and v2.witness["note"] == "sampling-limit"


def test_def8_dmax_zero_requires_direct_class(corpus):
    base = corpus["safe_reach_ok"]
    params = DefinitionParams(d_max=0.0)
    s = Scenario(
        id=base.id,
        dimension=base.dimension,
        environment=base.environment,
        robots=base.robots,
        focus=base.focus,
        epsilon=base.epsilon,
        params=params,
    )
    # x_r is not in sight of the anchor, so no zero-length connector works
    assert evaluate(s, 8).entangled


def test_def10_delta_zero_keeps_base_verdict(corpus):
    base = corpus["visibility_under"]
    params = DefinitionParams(d_max=2.0, delta=0.0, relaxed_base=9)
    s = Scenario(
        id=base.id, dimension=base.dimension, environment=base.environment,
        robots=base.robots, focus=base.focus, epsilon=base.epsilon, params=params,
    )
    v = evaluate(s, 10)
    assert v.not_entangled and v.witness["candidate"] == "original"


def test_def10_infinite_delta_matches_class_relaxed(corpus):
    for name, scenario in corpus.items():
        verdicts = dict(evaluate_all(scenario))
        if verdicts[10].applicable and verdicts[11].applicable:
            assert verdicts[10].state == verdicts[11].state, name


def test_def10_finite_delta_flattens_bump(corpus):
    base = corpus["gap_spur_bump"]
    # the spur detours about 2 units up; a leash budget of 5 covers pulling
    # it flat, so the relaxed variant accepts what the strict one rejects
    params = DefinitionParams(d_max=2.0, delta=5.0, relaxed_base=9)
    s = Scenario(
        id=base.id, dimension=base.dimension, environment=base.environment,
        robots=base.robots, focus=base.focus, epsilon=base.epsilon, params=params,
    )
    assert evaluate(s, 9).entangled
    v = evaluate(s, 10)
    assert v.not_entangled
    assert v.witness["leash_bound"] <= 5.0
    # with a tiny budget the deformation does not fit
    params2 = DefinitionParams(d_max=2.0, delta=0.05, relaxed_base=9)
    s2 = Scenario(
        id=base.id, dimension=base.dimension, environment=base.environment,
        robots=base.robots, focus=base.focus, epsilon=base.epsilon, params=params2,
    )
    assert evaluate(s2, 10).entangled


def test_def11_invariant_under_spur_perturbation(corpus):
    # the two bundled gap scenarios differ exactly by an obstacle-free spur
    v_base = dict(evaluate_all(corpus["gap_spur_base"]))[11]
    v_bump = dict(evaluate_all(corpus["gap_spur_bump"]))[11]
    assert v_base.state == v_bump.state == "N"


def test_def11_spur_invariance_randomized(corpus):
    import numpy as np

    from tetherkit.definitions import evaluate
    from tetherkit.environment import TetherConfig, _validate_scenario
    from tetherkit.geometry import Polyline, segment_clear

    base = corpus["visibility_under"]
    rng = np.random.default_rng(41)
    want = evaluate(base, 11).state
    env = base.environment
    done = 0
    while done < 25:
        verts = base.focus_tether.path.vertices
        k = int(rng.integers(0, len(verts) - 1))
        t = rng.uniform(0.2, 0.8)
        p = (1 - t) * verts[k] + t * verts[k + 1]
        q = rng.uniform(env.lo + 0.3, env.hi - 0.3)
        if not segment_clear((p, q), env.obstacles, rings=env.rings):
            continue
        new = np.concatenate([verts[: k + 1], [p, q, p], verts[k + 1 :]])
        try:
            path = Polyline(new)
        except Exception:
            continue
        s = Scenario(
            id="spurred", dimension="2D", environment=env,
            robots=(("r1", TetherConfig(path=path)),), focus="r1", params=base.params,
        )
        try:
            _validate_scenario(s, check_taut=False)
        except Exception:
            continue
        assert evaluate(s, 11).state == want
        done += 1


def test_evaluate_all_is_deterministic(corpus):
    s = corpus["closed_wrapped"]
    rows = [tuple((d, v.state) for d, v in evaluate_all(s)) for _ in range(3)]
    assert rows[0] == rows[1] == rows[2]


def test_single_robot_effective_environment_matches_base(corpus):
    s = corpus["hull_vs_retraction"]
    ctx = ScenarioContext(s)
    assert ctx.eff.blocking_obstacles == s.environment.obstacles
    assert ctx.eff.inflated == ()


def test_beta_mode_runs_on_projected_hook():
    from tetherkit.environment import project_scenario_3d

    # the focus tether hooks around the other tether without crossing it in
    # projection; the leash bound is evaluated on every admissible sight
    # pair and never exceeds the subpath length here, so the verdict stays N
    # and deterministic
    s = project_scenario_3d(
        "hook",
        [
            (
                "r1",
                [[0, -2, 0], [3.0, -2, 0], [3.0, 2.0, 0], [-1.0, 2.0, 0], [-1.0, -1.0, 0]],
                False,
            ),
            ("r2", [[1, 0, 1.5], [2.0, 0, 1.5]], False),
        ],
        v=(0.0, 0.0, 1.0),
        focus="r1",
        epsilon=0.25,
    )
    first = dict(evaluate_all(s))
    second = dict(evaluate_all(s))
    assert first[3].not_entangled  # no projected crossings at all
    assert first[9].applicable and first[9].state == second[9].state
    assert first[11].state == second[11].state
