from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import exhaustive_id_cost, random_scenario
from mtmceval.geometry import pair_cost
from mtmceval.idmeasures import (
    FN_TAG,
    FP_TAG,
    build_id_graph,
    coverage_oracle,
    harmonic_mean,
    id_scores,
    id_scores_from_counts,
    match_truth_to_result,
)
from mtmceval.model import Detection, build_scenario
from mtmceval.synth import make_figure1

seeds = st.integers(0, 2**32 - 1)
modes = st.sampled_from(["iou", "ground"])


def test_figure1a_graph():
    s = make_figure1("a")
    g = build_id_graph(s)
    assert g.size == 3
    # rows: A, f+1, f+2; columns: 1, 2, f-A
    assert g.costs[0].tolist() == [30, 60, 90]
    assert g.costs[1, 0] == 60 and g.costs[2, 1] == 30
    assert g.costs[1, 2] == 0 and g.costs[2, 2] == 0
    assert g.costs[1, 1] == g.costs[2, 0] == 181  # forbidden: sum of lengths + 1


def test_figure1a_match():
    m = match_truth_to_result(make_figure1("a"))
    assert m.truth_partner == {"A": "1"}
    assert (m.idtp, m.idfn, m.idfp) == (60, 30, 30)
    s = id_scores(m)
    assert s.exact() == (Fraction(2, 3),) * 3


@pytest.mark.parametrize("case,idfn", [("a", 30), ("b", 30), ("c", 15)])
def test_figure1_idfn(case, idfn):
    assert match_truth_to_result(make_figure1(case)).idfn == idfn


def test_perfect_tracker():
    s = make_figure1("a")
    p = build_scenario(s.truth, s.truth, s.cameras, s.overlap)
    g = build_id_graph(p)
    assert g.costs[0, 0] == 0
    m = match_truth_to_result(p)
    assert m.idfp == m.idfn == 0 and m.idtp == p.T
    assert id_scores(m).idf1 == 1.0
    cov = coverage_oracle(p, m)
    assert (cov.cov_t, cov.cov_c) == (1, 1)


def test_truth_only():
    s = build_scenario([Detection(1, f, "A", (0, 0, 5, 5)) for f in range(4)], [])
    assert build_id_graph(s).costs.tolist() == [[4]]
    m = match_truth_to_result(s)
    assert (m.idtp, m.idfn, m.idfp) == (0, 4, 0)
    assert m.mapping_lines() == [f"A,{FN_TAG},4,0"]


def test_empty_scenario():
    s = build_scenario([], [], [1])
    assert build_id_graph(s).costs.shape == (0, 0)
    scores = id_scores(match_truth_to_result(s))
    assert (scores.idp, scores.idr, scores.idf1) == (0.0, 0.0, 0.0)


def test_published_pair_harmonic_mean():
    # IDP 79.17 and IDR 44.97 give IDF1 57.36
    assert harmonic_mean(0.7917, 0.4497) == pytest.approx(0.5736, abs=5e-5)
    assert harmonic_mean(0.0, 0.0) == 0.0


def test_scores_from_counts():
    s = id_scores_from_counts(60, 30, 30)
    assert s.exact() == (Fraction(2, 3),) * 3
    assert id_scores_from_counts(0, 5, 0).idp == 0.0


def test_mapping_lines_tags():
    s = make_figure1("a")
    lines = match_truth_to_result(s).mapping_lines()
    assert lines == ["A,1,30,0", f"{FP_TAG},2,0,30"]


def test_zero_hit_pairs_reported_unmatched():
    truth = [Detection(1, f, "A", (0, 0, 10, 10)) for f in range(3)]
    comp = [Detection(1, f, "1", (500, 0, 10, 10)) for f in range(3)]
    m = match_truth_to_result(build_scenario(truth, comp))
    assert m.truth_partner == {} and m.idtp == 0 and m.total_cost == 6


def test_coverage_figure1a():
    s = make_figure1("a")
    cov = coverage_oracle(s, match_truth_to_result(s))
    assert (cov.cov_t, cov.cov_c) == (Fraction(2, 3), Fraction(2, 3))


def _check_invariants(s, m):
    lt = sum(len(t) for t in s.truth_trajectories)
    lc = sum(len(g) for g in s.computed_trajectories)
    assert m.idtp + m.idfn == lt and m.idtp + m.idfp == lc
    truth_ids = [p.truth for p in m.pairs if p.truth is not None]
    comp_ids = [p.computed for p in m.pairs if p.computed is not None]
    assert sorted(truth_ids) == sorted(t.identity for t in s.truth_trajectories)
    assert sorted(comp_ids) == sorted(g.identity for g in s.computed_trajectories)
    assert {v: k for k, v in m.truth_partner.items()} == m.computed_partner
    assert m.idtn == len(m.truth_partner)
    assert sum(p.fn for p in m.pairs) == m.idfn and sum(p.fp for p in m.pairs) == m.idfp


@given(seeds, modes, st.integers(1, 3))
@settings(max_examples=150, deadline=None)
def test_matches_exhaustive_oracle(seed, mode, cameras):
    s = random_scenario(np.random.default_rng(seed), mode=mode, cameras=cameras)
    m = match_truth_to_result(s)
    _check_invariants(s, m)
    assert m.total_cost == exhaustive_id_cost(s)


@given(seeds, modes)
@settings(max_examples=100, deadline=None)
def test_pairs_report_their_true_cost(seed, mode):
    s = random_scenario(np.random.default_rng(seed), mode=mode)
    m = match_truth_to_result(s)
    truth = {t.identity: t for t in s.truth_trajectories}
    comp = {g.identity: g for g in s.computed_trajectories}
    for p in m.pairs:
        c = pair_cost(truth.get(p.truth), comp.get(p.computed), s.overlap)
        assert (p.fn, p.fp) == (c.fn, c.fp)


@given(seeds, modes, st.integers(1, 3))
@settings(max_examples=100, deadline=None)
def test_coverage_equals_recall_and_precision(seed, mode, cameras):
    s = random_scenario(np.random.default_rng(seed), mode=mode, cameras=cameras, max_truth=12, max_computed=12)
    m = match_truth_to_result(s)
    idp, idr, _ = id_scores(m).exact()
    cov = coverage_oracle(s, m)
    assert (cov.cov_t, cov.cov_c) == (idr, idp)
    # a matched pair explains the same number of detections on both sides
    for t, g in m.truth_partner.items():
        assert cov.truth[t] == cov.computed[g]


@given(seeds, modes)
@settings(max_examples=100, deadline=None)
def test_swap_symmetry(seed, mode):
    s = random_scenario(np.random.default_rng(seed), mode=mode)
    a = id_scores(match_truth_to_result(s))
    b = id_scores(match_truth_to_result(s.swapped()))
    assert (a.idp, a.idr, a.idf1) == (b.idr, b.idp, b.idf1)


@given(seeds)
@settings(max_examples=60, deadline=None)
def test_idf1_is_harmonic_mean(seed):
    s = id_scores(match_truth_to_result(random_scenario(np.random.default_rng(seed))))
    p, r, f = s.exact()
    if p + r:
        assert f == 2 * p * r / (p + r)
    assert 0 <= f <= 1


def test_large_component_solved_exactly():
    # dense overlap: every computed trajectory hits every truth at some site
    rng = np.random.default_rng(5)
    s = random_scenario(rng, max_truth=5, max_computed=5, max_frames=8, min_truth=5)
    assert match_truth_to_result(s).total_cost == exhaustive_id_cost(s)
