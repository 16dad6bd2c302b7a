"""Event-based measures: per-frame CLEAR matching, mismatches, MOTA, MOTP, MCTA."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .assignment import linear_assignment
from .errors import UndefinedMeasureError, ValidationError
from .geometry import IOU
from .model import Scenario

WITHIN = 1
HANDOVER = 2

MT_THRESHOLD = 0.8
ML_THRESHOLD = 0.2


@dataclass(frozen=True, eq=False)
class ClearHistory:
    """Outcome of sequential per-frame matching.

    ``truth_match[i]`` is the computed identity code matched to truth row
    ``i`` (-1 if missed); ``comp_match[j]`` the truth code matched to
    computed row ``j`` (-1 if a false positive). ``partner_row[i]`` is the
    matched computed row itself and ``quality`` the IoU or distance of the
    match.
    """

    scenario: Scenario
    truth_match: np.ndarray
    comp_match: np.ndarray
    partner_row: np.ndarray
    quality: np.ndarray

    @property
    def tp(self) -> int:
        return int((self.truth_match >= 0).sum())

    @property
    def fn(self) -> int:
        return int((self.truth_match < 0).sum())

    @property
    def fp(self) -> int:
        return int((self.comp_match < 0).sum())


def _resolve(cands, cost, sentinel):
    """Min-cost, max-cardinality choice among conflicting candidate pairs."""
    rows = sorted({a for a, _, _ in cands})
    cols = sorted({b for _, b, _ in cands})
    ri = {r: k for k, r in enumerate(rows)}
    ci = {c: k for k, c in enumerate(cols)}
    m = np.full((len(rows), len(cols)), sentinel)
    for a, b, k in cands:
        m[ri[a], ci[b]] = cost[k]
    chosen = []
    for r, c in zip(*linear_assignment(m)):
        if m[r, c] != sentinel:
            chosen.append((rows[r], cols[c]))
    return chosen


def clear_match(scenario: Scenario) -> ClearHistory:
    """Sequential per-frame matching, each camera on its own.

    A pair matched at frame t-1 is kept at t if it still overlaps within
    delta. The remaining detections are matched by minimum total cost
    (1 - IoU, or distance) among pairs within delta, maximizing the number
    of matches first.
    """
    nt, nc = len(scenario.truth), len(scenario.computed)
    truth_match = np.full(nt, -1, np.int64)
    comp_match = np.full(nc, -1, np.int64)
    partner_row = np.full(nt, -1, np.int64)
    quality = np.full(nt, np.nan)
    hp = scenario.hits
    if not len(hp.t_row):
        return ClearHistory(scenario, truth_match, comp_match, partner_row, quality)

    overlap = scenario.overlap
    cost_arr = 1.0 - hp.quality if overlap.mode == IOU else hp.quality
    sentinel = 2.0 * max(overlap.delta, 1.0) * (1 + min(nt, nc))
    tcode = scenario.truth.ident.tolist()
    ccode = scenario.computed.ident.tolist()
    tr = hp.t_row.tolist()
    cr = hp.c_row.tolist()
    site = hp.site.tolist()
    cost = cost_arr.tolist()

    m_t, m_c, m_k = [], [], []
    prev: dict[int, int] = {}
    prev_site = None
    n = len(tr)
    i = 0
    while i < n:
        s = site[i]
        j = i + 1
        while j < n and site[j] == s:
            j += 1
        carry = prev if prev_site == s - 1 else {}
        prev = {}
        used_t, used_c = set(), set()
        rest = []
        for k in range(i, j):
            a, b = tr[k], cr[k]
            if carry and carry.get(tcode[a]) == ccode[b]:
                used_t.add(a)
                used_c.add(b)
                m_t.append(a)
                m_c.append(b)
                m_k.append(k)
                prev[tcode[a]] = ccode[b]
            else:
                rest.append((a, b, k))
        if used_t:
            rest = [x for x in rest if x[0] not in used_t and x[1] not in used_c]
        if rest:
            rows = {a for a, _, _ in rest}
            cols = {b for _, b, _ in rest}
            if len(rows) == len(rest) and len(cols) == len(rest):
                chosen = rest
            else:
                by_pair = {(a, b): k for a, b, k in rest}
                chosen = [(a, b, by_pair[a, b]) for a, b in _resolve(rest, cost, sentinel)]
            for a, b, k in chosen:
                m_t.append(a)
                m_c.append(b)
                m_k.append(k)
                prev[tcode[a]] = ccode[b]
        prev_site = s
        i = j

    m_t = np.asarray(m_t, np.int64)
    m_c = np.asarray(m_c, np.int64)
    truth_match[m_t] = scenario.computed.ident[m_c]
    comp_match[m_c] = scenario.truth.ident[m_t]
    partner_row[m_t] = m_c
    quality[m_t] = hp.quality[np.asarray(m_k, np.int64)]
    return ClearHistory(scenario, truth_match, comp_match, partner_row, quality)


class Mismatches(NamedTuple):
    frag_within: int
    frag_handover: int
    merge_within: int
    merge_handover: int
    frag_event: np.ndarray
    merge_event: np.ndarray

    @property
    def frags(self) -> int:
        return self.frag_within + self.frag_handover

    @property
    def merges(self) -> int:
        return self.merge_within + self.merge_handover

    @property
    def mu(self) -> int:
        return self.frags + self.merges

    @property
    def mu_w(self) -> int:
        return self.frag_within + self.merge_within

    @property
    def mu_h(self) -> int:
        return self.frag_handover + self.merge_handover


def _switch_events(ident: np.ndarray, camera: np.ndarray, match: np.ndarray) -> np.ndarray:
    """Per row: WITHIN/HANDOVER where the matched partner changed since the
    previous matched row of the same identity, else 0. Rows must be grouped
    by identity in time order."""
    events = np.zeros(len(ident), np.int8)
    idx = np.flatnonzero(match >= 0)
    if len(idx) < 2:
        return events
    a, b = idx[:-1], idx[1:]
    switch = (ident[a] == ident[b]) & (match[a] != match[b])
    cross = camera[a] != camera[b]
    events[b[switch & ~cross]] = WITHIN
    events[b[switch & cross]] = HANDOVER
    return events


def count_mismatches(history: ClearHistory) -> Mismatches:
    """Fragmentations along truth identities and merges along computed ones.

    Consecutive matched observations are compared; a change of partner is
    one event, handover when the two observations lie in different cameras.
    """
    s = history.scenario
    frag = _switch_events(s.truth.ident, s.truth.camera, history.truth_match)
    merge = _switch_events(s.computed.ident, s.computed.camera, history.comp_match)
    return Mismatches(
        int((frag == WITHIN).sum()),
        int((frag == HANDOVER).sum()),
        int((merge == WITHIN).sum()),
        int((merge == HANDOVER).sum()),
        frag,
        merge,
    )


def mota_motp(history: ClearHistory, mismatches: Mismatches, use: str = "phi") -> tuple[float, float | None]:
    """MOTA = 1 - (FN + FP + mismatches) / T, and MOTP in [0, 1].

    ``use="phi"`` counts fragmentations only; ``use="mu"`` counts all
    mismatches. MOTP is mean IoU (iou mode) or 1 - mean(distance / delta)
    (ground mode) over true positives, None without any.
    """
    T = len(history.scenario.truth)
    if T == 0:
        raise UndefinedMeasureError("MOTA is undefined without ground-truth detections")
    if use == "phi":
        switches = mismatches.frags
    elif use == "mu":
        switches = mismatches.mu
    else:
        raise ValidationError(f"unknown mismatch count {use!r}; expected 'phi' or 'mu'")
    mota = 1.0 - (history.fn + history.fp + switches) / T
    q = history.quality[history.truth_match >= 0]
    if not q.size:
        return mota, None
    overlap = history.scenario.overlap
    motp = float(q.mean()) if overlap.mode == IOU else 1.0 - float((q / overlap.delta).mean())
    return mota, motp


def mt_ml_frg(history: ClearHistory) -> tuple[int, int, int]:
    """Mostly tracked (>= 80% matched), mostly lost (<= 20%), track interruptions."""
    s = history.scenario
    ident = s.truth.ident
    k = len(s.truth.labels)
    if k == 0:
        return 0, 0, 0
    matched = history.truth_match >= 0
    ratio = np.bincount(ident, weights=matched, minlength=k) / s.truth_lengths
    mt = int((ratio >= MT_THRESHOLD).sum())
    ml = int((ratio <= ML_THRESHOLD).sum())
    starts = matched.copy()
    starts[1:] &= ~(matched[:-1] & (ident[1:] == ident[:-1]))
    runs = np.bincount(ident, weights=starts, minlength=k).astype(np.int64)
    frg = int(np.maximum(runs - 1, 0).sum())
    return mt, ml, frg


def transitions(scenario: Scenario) -> tuple[int, int]:
    """(within, handover) counts of consecutive truth observations."""
    t = scenario.truth
    if len(t) < 2:
        return 0, 0
    same = t.ident[1:] == t.ident[:-1]
    cross = t.camera[1:] != t.camera[:-1]
    return int((same & ~cross).sum()), int((same & cross).sum())


class Mcta(NamedTuple):
    mcta: float
    f1: float
    within: float
    handover: float
    t_within: int
    t_handover: int


def mcta(history: ClearHistory, mismatches: Mismatches) -> Mcta:
    """F1 x (1 - M^w / T^w) x (1 - M^h / T^h).

    A term is 1 when its denominator is 0 and is clipped at 0 below.
    """
    tp, fp, fn = history.tp, history.fp, history.fn
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    t_w, t_h = transitions(history.scenario)
    within = max(0.0, 1.0 - mismatches.mu_w / t_w) if t_w else 1.0
    handover = max(0.0, 1.0 - mismatches.mu_h / t_h) if t_h else 1.0
    return Mcta(f1 * within * handover, f1, within, handover, t_w, t_h)


@dataclass(frozen=True)
class EventScores:
    tp: int
    fp: int
    fn: int
    frag_within: int
    frag_handover: int
    merge_within: int
    merge_handover: int
    mota: float | None
    motp: float | None
    precision: float
    recall: float
    mt: int
    ml: int
    frg: int
    gt: int
    mcta: Mcta

    @property
    def frags(self) -> int:
        return self.frag_within + self.frag_handover

    @property
    def merges(self) -> int:
        return self.merge_within + self.merge_handover

    @property
    def mismatches(self) -> int:
        return self.frags + self.merges


class EventAnalysis(NamedTuple):
    scores: EventScores
    history: ClearHistory
    mismatches: Mismatches


def evaluate_events(scenario: Scenario, mota_mismatches: str = "phi") -> EventAnalysis:
    history = clear_match(scenario)
    mism = count_mismatches(history)
    try:
        mota, motp = mota_motp(history, mism, mota_mismatches)
    except UndefinedMeasureError:
        mota, motp = None, None
    mt, ml, frg = mt_ml_frg(history)
    tp, fp, fn = history.tp, history.fp, history.fn
    scores = EventScores(
        tp=tp,
        fp=fp,
        fn=fn,
        frag_within=mism.frag_within,
        frag_handover=mism.frag_handover,
        merge_within=mism.merge_within,
        merge_handover=mism.merge_handover,
        mota=mota,
        motp=motp,
        precision=tp / (tp + fp) if tp + fp else 0.0,
        recall=tp / (tp + fn) if tp + fn else 0.0,
        mt=mt,
        ml=ml,
        frg=frg,
        gt=len(scenario.truth.labels),
        mcta=mcta(history, mism),
    )
    return EventAnalysis(scores, history, mism)
