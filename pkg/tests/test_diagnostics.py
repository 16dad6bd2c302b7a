import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import exhaustive_id_cost, random_scenario
from mtmceval.diagnostics import (
    CASES,
    CLEAN,
    FRAG_BUT_CORRECT,
    FRAG_MISSED,
    INCORRECT,
    MERGE_BUT_CORRECT,
    MERGE_MISSED,
    classify_handovers,
    handover_difficulty,
    per_camera_report,
)
from mtmceval.events import evaluate_events, transitions
from mtmceval.idmeasures import id_scores, match_truth_to_result
from mtmceval.model import Detection, build_scenario
from mtmceval.synth import RandomParams, make_figure1, make_figure2
from mtmceval.synth import random_scenario as synth_scenario

seeds = st.integers(0, 2**32 - 1)


def box_row(identity, frame, camera, x=0.0):
    return Detection(camera, frame, identity, (x, 0.0, 40.0, 100.0), (x / 40.0, 0.0))


def _classify(s):
    return classify_handovers(s, match_truth_to_result(s), evaluate_events(s))


def _perfect(s):
    return build_scenario(s.truth, s.truth, s.cameras, s.overlap)


def test_figure2a_frag_but_correct():
    r = _classify(make_figure2("a"))
    assert [c.classification for c in r.cases] == [FRAG_BUT_CORRECT]
    assert r.cases[0].fragment_length == 1
    assert r.histogram[FRAG_BUT_CORRECT] == 1 and sum(r.histogram.values()) == 1


def test_figure2b_missed_by_event_measures():
    r = _classify(make_figure2("b"))
    assert [c.classification for c in r.cases] == [FRAG_MISSED]
    assert r.cases[0].cameras == (1, 2)


@pytest.mark.parametrize("case", ["a", "b"])
def test_perfect_tracker_all_clean(case):
    r = _classify(_perfect(make_figure2(case)))
    assert r.cases and all(c.classification == CLEAN for c in r.cases)
    assert handover_difficulty(_perfect(make_figure2(case))).difference == 0


def _merge_case(correct: bool):
    # A: cam 1 frames 1-10, cam 2 frames 11-20. B: cam 1 frames 1-10 elsewhere, then leaves.
    # The tracker hands A over to B's identity "2" in camera 2.
    truth = [box_row("A", f, 1) for f in range(1, 11)] + [box_row("A", f, 2) for f in range(11, 21)]
    truth += [box_row("B", f, 1, 300.0) for f in range(1, 11)]
    comp = [box_row("1", f, 1) for f in range(1, 11)] + [box_row("2", f, 1, 300.0) for f in range(1, 11)]
    comp += [box_row("2" if not correct else "1", f, 2) for f in range(11, 21)]
    return build_scenario(truth, comp, [1, 2])


def test_handover_to_other_identity_is_incorrect():
    # "2" follows B then A: a merge the event measures do see
    r = _classify(_merge_case(correct=False))
    assert [c.classification for c in r.cases] == [INCORRECT]


def test_merge_but_correct():
    # A is tracked by "1" throughout; B in a third camera gets "1" for the frame
    # right before A's handover, so "1" hops cameras onto A at the handover
    truth = [box_row("A", f, 1) for f in range(1, 11)] + [box_row("A", f, 2) for f in range(11, 21)]
    truth += [box_row("B", f, 3, 300.0) for f in range(1, 21)]
    comp = [box_row("1", f, 1) for f in range(1, 11)] + [box_row("1", f, 2) for f in range(11, 21)]
    comp += [box_row("1" if f == 10 else "2", f, 3, 300.0) for f in range(1, 21)]
    s = build_scenario(truth, comp, [1, 2, 3])
    r = _classify(s)
    assert [c.classification for c in r.cases] == [MERGE_BUT_CORRECT]


def test_merge_missed():
    # "1" follows A across its handover cleanly, then follows B for much longer;
    # the bijection gives "1" to B, so A's handover belongs to a merged identity
    truth = [box_row("A", f, 1) for f in range(1, 11)] + [box_row("A", f, 2) for f in range(11, 21)]
    truth += [box_row("B", f, 1, 300.0) for f in range(50, 150)]
    comp = [box_row("1", f, 1) for f in range(1, 11)] + [box_row("1", f, 2) for f in range(11, 21)]
    comp += [box_row("1", f, 1, 300.0) for f in range(50, 150)]
    s = build_scenario(truth, comp, [1, 2])
    assert match_truth_to_result(s).truth_partner == {"B": "1"}
    r = _classify(s)
    assert [c.classification for c in r.cases] == [MERGE_MISSED]


def test_swap_across_blind_spot():
    # each camera is tracked perfectly, but the two identities swap labels in the gap
    truth, comp = [], []
    for ident, x in (("A", 0.0), ("B", 300.0)):
        truth += [box_row(ident, f, 1, x) for f in range(1, 11)]
        truth += [box_row(ident, f, 2, x) for f in range(13, 23)]
    comp += [box_row("1", f, 1, 0.0) for f in range(1, 11)] + [box_row("1", f, 2, 300.0) for f in range(13, 23)]
    comp += [box_row("2", f, 1, 300.0) for f in range(1, 11)] + [box_row("2", f, 2, 0.0) for f in range(13, 23)]
    s = build_scenario(truth, comp, [1, 2])
    d = handover_difficulty(s)
    assert d.single_errors == 0 and d.multi_errors == 40 and d.difference == 40
    assert d.multi_errors == exhaustive_id_cost(s)
    assert d.f1_delta == pytest.approx(0.5)
    # the event measures see these as handover switches
    assert all(c.classification == INCORRECT for c in _classify(s).cases)


def test_single_camera_note():
    d = handover_difficulty(make_figure1("b"))
    assert d.difference == 0 and d.multi_errors == d.single_errors and d.note


def test_single_camera_row_equals_global():
    rows = per_camera_report(make_figure1("c"))
    assert len(rows) == 2 and rows[-1].camera is None
    a, b = rows
    assert a.id == b.id and a.events == b.events


def test_independent_cameras_global_idf1():
    rng = np.random.default_rng(3)
    s1 = random_scenario(rng, cameras=1, min_truth=2)
    s2 = random_scenario(rng, cameras=1, min_truth=2)
    relabel = lambda rows, tag: [Detection(2, d.frame, tag + d.identity, d.box, d.world) for d in rows]
    truth = list(s1.rows("truth")) + relabel(s2.rows("truth"), "x")
    comp = list(s1.rows("computed")) + relabel(s2.rows("computed"), "x")
    s = build_scenario(truth, comp, [1, 2])
    total = len(s.truth) + len(s.computed)
    expected = (total - exhaustive_id_cost(s)) / total
    assert per_camera_report(s)[-1].id.idf1 == pytest.approx(expected, abs=1e-12)
    assert handover_difficulty(s).difference == 0


def test_eight_camera_table_shape():
    sc = synth_scenario(RandomParams(cameras=8, identities=12, frames=80, fragment_rate=0.3), seed=1)
    rows = per_camera_report(sc.corrupted)
    assert [r.camera for r in rows] == [1, 2, 3, 4, 5, 6, 7, 8, None]


def _check_inequalities(s):
    d = handover_difficulty(s)
    assert d.difference >= 0
    assert d.idp_delta >= -1e-12 and d.idr_delta >= -1e-12 and d.f1_delta >= -1e-12
    r = _classify(s)
    assert sum(r.histogram.values()) == len(r.cases) == transitions(s)[1]
    assert set(r.histogram) == set(CASES)


@given(seeds, st.sampled_from(["iou", "ground"]), st.integers(2, 4))
@settings(max_examples=100, deadline=None)
def test_inequalities_random(seed, mode, cameras):
    _check_inequalities(random_scenario(np.random.default_rng(seed), mode=mode, cameras=cameras, max_truth=8))


@given(seeds, st.integers(2, 4), st.floats(0, 0.5))
@settings(max_examples=40, deadline=None)
def test_inequalities_synthetic(seed, cameras, overlap):
    p = RandomParams(
        cameras=cameras, identities=6, frames=80, mean_length=40, overlap=overlap,
        fragment_rate=0.3, merge_rate=0.2, flip_rate=0.2, drop_rate=0.2, spurious_rate=0.5, jitter=0.1,
    )
    _check_inequalities(synth_scenario(p, seed).corrupted)
