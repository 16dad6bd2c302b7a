"""Identity-based measures: truth-to-result matching, IDP, IDR and IDF1.

Every true trajectory is paired with at most one computed trajectory, for
the whole sequence, so that the number of mis-assigned detections is
minimal. The graph has a regular node per trajectory plus one irregular
partner each (``f+`` for computed, ``f-`` for truth) that absorbs an
unmatched trajectory at the cost of its full length.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .assignment import linear_assignment
from .geometry import pair_cost
from .model import Scenario

FP_TAG = "FP"
FN_TAG = "FN"


class MatchedPair(NamedTuple):
    """One selected edge. ``truth``/``computed`` is None for an irregular node."""

    truth: str | None
    computed: str | None
    fn: int
    fp: int


@dataclass(frozen=True)
class TruthToResultMatch:
    pairs: tuple[MatchedPair, ...]
    idtp: int
    idfp: int
    idfn: int
    idtn: int
    truth_partner: dict[str, str] = field(default_factory=dict)
    computed_partner: dict[str, str] = field(default_factory=dict)

    @property
    def total_cost(self) -> int:
        return self.idfp + self.idfn

    @property
    def mt(self) -> frozenset[str]:
        return frozenset(self.truth_partner)

    @property
    def mc(self) -> frozenset[str]:
        return frozenset(self.computed_partner)

    def mapping_lines(self) -> list[str]:
        """``truth_id,computed_id,fn,fp`` lines; irregular partners are tagged FP/FN."""
        return [
            f"{p.truth if p.truth is not None else FP_TAG},"
            f"{p.computed if p.computed is not None else FN_TAG},{p.fn},{p.fp}"
            for p in self.pairs
        ]


@dataclass(frozen=True)
class IdScores:
    idp: float
    idr: float
    idf1: float
    idtp: int
    idfp: int
    idfn: int

    def exact(self) -> tuple[Fraction, Fraction, Fraction]:
        """(IDP, IDR, IDF1) as exact fractions, zero when undefined."""
        return (
            _ratio(self.idtp, self.idtp + self.idfp),
            _ratio(self.idtp, self.idtp + self.idfn),
            _ratio(2 * self.idtp, 2 * self.idtp + self.idfp + self.idfn),
        )


def _ratio(num: int, den: int) -> Fraction:
    return Fraction(num, den) if den else Fraction(0)


@dataclass(frozen=True)
class IdGraph:
    """Square cost matrix of the truth-to-result graph.

    Rows: truth trajectories, then one ``f+`` per computed trajectory.
    Columns: computed trajectories, then one ``f-`` per truth trajectory.
    """

    costs: np.ndarray
    truth: tuple[str, ...]
    computed: tuple[str, ...]

    @property
    def size(self) -> int:
        return self.costs.shape[0]


def pair_hits(scenario: Scenario) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per (truth code, computed code): number of sites where the two overlap.

    Returns three aligned arrays, only for pairs with at least one hit.
    """
    hp = scenario.hits
    nc = max(len(scenario.computed.labels), 1)
    key = scenario.truth.ident[hp.t_row] * nc + scenario.computed.ident[hp.c_row]
    uniq, counts = np.unique(key, return_counts=True)
    return uniq // nc, uniq % nc, counts.astype(np.int64)


def _square(len_t: np.ndarray, len_c: np.ndarray, hits: np.ndarray, sentinel: int) -> np.ndarray:
    kt, kc = len(len_t), len(len_c)
    n = kt + kc
    m = np.zeros((n, n), np.int64)
    m[:kt, :kc] = len_t[:, None] + len_c[None, :] - 2 * hits
    m[:kt, kc:] = sentinel
    m[kt:, :kc] = sentinel
    m[np.arange(kt), kc + np.arange(kt)] = len_t
    m[kt + np.arange(kc), np.arange(kc)] = len_c
    return m


def build_id_graph(scenario: Scenario) -> IdGraph:
    len_t = scenario.truth_lengths.astype(np.int64)
    len_c = scenario.computed_lengths.astype(np.int64)
    hits = np.zeros((len(len_t), len(len_c)), np.int64)
    ti, ci, h = pair_hits(scenario)
    hits[ti, ci] = h
    sentinel = int(len_t.sum() + len_c.sum() + 1)
    return IdGraph(_square(len_t, len_c, hits, sentinel), scenario.truth.labels, scenario.computed.labels)


def _solve_component(len_t, len_c, hits) -> list[tuple[int, int]]:
    """Matched (truth, computed) local indices of one connected component."""
    kt = len(len_t)
    sentinel = int(len_t.sum() + len_c.sum() + 1)
    rows, cols = linear_assignment(_square(len_t, len_c, hits, sentinel))
    out = []
    for r, c in zip(rows.tolist(), cols.tolist()):
        if r < kt and c < len(len_c) and hits[r, c] > 0:
            out.append((r, c))
    return out


def match_truth_to_result(scenario: Scenario) -> TruthToResultMatch:
    """Optimal one-to-one truth-to-result match.

    Trajectory pairs that never overlap cost exactly as much as sending both
    to their irregular partners, so the graph splits into independent
    components joined by overlapping pairs; each is solved on its own
    square graph. A selected pair with no overlapping detection is reported
    as two unmatched trajectories (same cost).
    """
    len_t = scenario.truth_lengths.astype(np.int64)
    len_c = scenario.computed_lengths.astype(np.int64)
    nt, nc = len(len_t), len(len_c)
    ti, ci, h = pair_hits(scenario)

    partner_of_truth = np.full(nt, -1, np.int64)
    hits_of_truth = np.zeros(nt, np.int64)
    if len(ti):
        graph = coo_matrix((np.ones(len(ti)), (ti, nt + ci)), shape=(nt + nc, nt + nc))
        _, comp = connected_components(graph, directed=False)
        edge_comp = comp[ti]
        order = np.argsort(edge_comp, kind="stable")
        bounds = np.flatnonzero(np.diff(edge_comp[order])) + 1
        for idx in np.split(order, bounds):
            et, ec, eh = ti[idx], ci[idx], h[idx]
            if len(idx) == 1:
                partner_of_truth[et[0]] = ec[0]
                hits_of_truth[et[0]] = eh[0]
                continue
            tu = np.unique(et)
            cu = np.unique(ec)
            dense = np.zeros((len(tu), len(cu)), np.int64)
            dense[np.searchsorted(tu, et), np.searchsorted(cu, ec)] = eh
            for r, c in _solve_component(len_t[tu], len_c[cu], dense):
                partner_of_truth[tu[r]] = cu[c]
                hits_of_truth[tu[r]] = dense[r, c]

    tl, cl = scenario.truth.labels, scenario.computed.labels
    pairs = []
    truth_partner, computed_partner = {}, {}
    matched_c = np.zeros(nc, bool)
    for k in range(nt):
        j = partner_of_truth[k]
        if j < 0:
            pairs.append(MatchedPair(tl[k], None, int(len_t[k]), 0))
            continue
        hk = int(hits_of_truth[k])
        pairs.append(MatchedPair(tl[k], cl[j], int(len_t[k]) - hk, int(len_c[j]) - hk))
        truth_partner[tl[k]] = cl[j]
        computed_partner[cl[j]] = tl[k]
        matched_c[j] = True
    for j in np.flatnonzero(~matched_c).tolist():
        pairs.append(MatchedPair(None, cl[j], 0, int(len_c[j])))

    idtp = int(hits_of_truth.sum())
    return TruthToResultMatch(
        pairs=tuple(pairs),
        idtp=idtp,
        idfp=int(len_c.sum()) - idtp,
        idfn=int(len_t.sum()) - idtp,
        idtn=len(truth_partner),
        truth_partner=truth_partner,
        computed_partner=computed_partner,
    )


def id_scores(m: TruthToResultMatch) -> IdScores:
    idp, idr, idf1 = (
        float(_ratio(m.idtp, m.idtp + m.idfp)),
        float(_ratio(m.idtp, m.idtp + m.idfn)),
        float(_ratio(2 * m.idtp, 2 * m.idtp + m.idfp + m.idfn)),
    )
    return IdScores(idp, idr, idf1, m.idtp, m.idfp, m.idfn)


def harmonic_mean(precision: float, recall: float) -> float:
    """F1 from a precision/recall pair; 0 when both are 0."""
    total = precision + recall
    return 2 * precision * recall / total if total else 0.0


def id_scores_from_counts(idtp: int, idfp: int, idfn: int) -> IdScores:
    return id_scores(TruthToResultMatch((), idtp, idfp, idfn, 0))


class Coverage(NamedTuple):
    cov_t: Fraction
    cov_c: Fraction
    truth: dict[str, int]
    computed: dict[str, int]


def coverage_oracle(scenario: Scenario, m: TruthToResultMatch) -> Coverage:
    """Ground-truth and tracker-output coverage, recounted frame by frame.

    Independent of the graph solver: misses are re-evaluated per site with
    :func:`pair_cost` against each trajectory's matched partner. Equals
    ``(IDR, IDP)`` exactly.
    """
    truth = {t.identity: t for t in scenario.truth_trajectories}
    computed = {g.identity: g for g in scenario.computed_trajectories}
    cov_truth = {}
    for label, partner in m.truth_partner.items():
        traj = truth[label]
        cov_truth[label] = len(traj) - pair_cost(traj, computed[partner], scenario.overlap).fn
    cov_comp = {}
    for label, partner in m.computed_partner.items():
        traj = computed[label]
        cov_comp[label] = len(traj) - pair_cost(truth[partner], traj, scenario.overlap).fp
    all_t = sum(len(t) for t in truth.values())
    all_c = sum(len(g) for g in computed.values())
    return Coverage(
        _ratio(sum(cov_truth.values()), all_t),
        _ratio(sum(cov_comp.values()), all_c),
        cov_truth,
        cov_comp,
    )
