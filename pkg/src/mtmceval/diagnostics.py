"""Cross-measure analysis: handover difficulty, handover verdicts, per-camera rows."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .events import HANDOVER, EventAnalysis, EventScores, evaluate_events
from .idmeasures import IdScores, TruthToResultMatch, id_scores, id_scores_from_counts, match_truth_to_result
from .model import Scenario, restrict_to_camera

CLEAN = "clean"
INCORRECT = "incorrect"
FRAG_BUT_CORRECT = "frag-but-correct"
MERGE_BUT_CORRECT = "merge-but-correct"
FRAG_MISSED = "correct-but-frag-missed"
MERGE_MISSED = "correct-but-merge-missed"
CASES = (FRAG_BUT_CORRECT, MERGE_BUT_CORRECT, FRAG_MISSED, MERGE_MISSED, CLEAN, INCORRECT)


@dataclass(frozen=True)
class HandoverDifficulty:
    multi_errors: int
    single_errors: int
    difference: int
    idp_delta: float
    idr_delta: float
    f1_delta: float
    multi: IdScores
    single: IdScores
    note: str = ""


def per_camera_matches(scenario: Scenario) -> dict[int, TruthToResultMatch]:
    return {cam: match_truth_to_result(restrict_to_camera(scenario, cam)) for cam in sorted(scenario.cameras)}


def handover_difficulty(
    scenario: Scenario,
    multi: TruthToResultMatch | None = None,
    singles: dict[int, TruthToResultMatch] | None = None,
) -> HandoverDifficulty:
    """Identity errors of the joint match minus the sum of per-camera errors, with the matching IDP/IDR/IDF1 gaps (single minus
    multi). Precomputed matches may be passed in."""
    multi = multi or match_truth_to_result(scenario)
    singles = singles if singles is not None else per_camera_matches(scenario)
    ms = id_scores(multi)
    ss = id_scores_from_counts(
        sum(m.idtp for m in singles.values()),
        sum(m.idfp for m in singles.values()),
        sum(m.idfn for m in singles.values()),
    )
    multi_errors = multi.idfp + multi.idfn
    single_errors = ss.idfp + ss.idfn
    note = "single camera: no cross-camera constraint" if len(scenario.cameras) < 2 else ""
    return HandoverDifficulty(
        multi_errors, single_errors, multi_errors - single_errors,
        ss.idp - ms.idp, ss.idr - ms.idr, ss.idf1 - ms.idf1, ms, ss, note,
    )


class HandoverCase(NamedTuple):
    truth: str
    cameras: tuple[int, int]
    frames: tuple[int, int]
    classification: str
    fragment_length: int


@dataclass(frozen=True)
class HandoverReport:
    cases: tuple[HandoverCase, ...]
    histogram: dict[str, int] = field(default_factory=dict)


def _dominant(values) -> int:
    """Most frequent matched partner (>= 0) of a segment, earliest on ties; -1 if none."""
    counts = Counter(v for v in values if v >= 0)
    if not counts:
        return -1
    best = max(counts.values())
    return next(v for v in values if v >= 0 and counts[v] == best)


def _run_length(values, dominant: int) -> int:
    """Leading run of matched partners other than ``dominant``."""
    n = 0
    for v in values:
        if v < 0 or v == dominant:
            break
        n += 1
    return n


def classify_handovers(scenario: Scenario, id_match: TruthToResultMatch, events: EventAnalysis) -> HandoverReport:
    """Compare event-based and identity-based verdicts at every handover.

    A handover is a pair of consecutive observations of one true identity
    in different cameras; each side's segment is the run of observations in
    that camera. Identity verdict: the handover is correct when the
    identity's whole-sequence partner covers more than half of both
    segments. Event verdict: a handover fragmentation at the second
    observation, or a handover merge on the computed detection matched
    there.
    """
    t = scenario.truth
    n = len(t)
    if n < 2:
        return HandoverReport((), {c: 0 for c in CASES})
    tm = events.history.truth_match
    mism = events.mismatches

    # per truth row: does the sequence-level partner overlap here?
    cl = {lbl: k for k, lbl in enumerate(scenario.computed.labels)}
    partner = np.array([cl.get(id_match.truth_partner.get(lbl), -1) for lbl in t.labels], np.int64)
    hp = scenario.hits
    own = scenario.computed.ident[hp.c_row] == partner[t.ident[hp.t_row]]
    covered = np.zeros(n, bool)
    covered[hp.t_row[own]] = True

    new_seg = np.ones(n, bool)
    new_seg[1:] = (t.ident[1:] != t.ident[:-1]) | (t.camera[1:] != t.camera[:-1])
    seg_start = np.flatnonzero(new_seg)
    seg_end = np.append(seg_start[1:], n)
    seg_of = np.cumsum(new_seg) - 1
    seg_cov = np.add.reduceat(covered.astype(np.int64), seg_start)
    seg_ok = 2 * seg_cov > (seg_end - seg_start)

    handovers = np.flatnonzero((t.ident[1:] == t.ident[:-1]) & (t.camera[1:] != t.camera[:-1]))
    cases = []
    for k in handovers.tolist():
        a, b = int(seg_of[k]), int(seg_of[k + 1])
        seg_a = tm[seg_start[a] : seg_end[a]].tolist()
        seg_b = tm[seg_start[b] : seg_end[b]].tolist()
        dom_a, dom_b = _dominant(seg_a), _dominant(seg_b)
        frag = mism.frag_event[k + 1] == HANDOVER
        crow = events.history.partner_row[k + 1]
        merge = crow >= 0 and mism.merge_event[crow] == HANDOVER
        correct = bool(seg_ok[a] and seg_ok[b])
        if correct:
            label = (FRAG_BUT_CORRECT if frag else MERGE_BUT_CORRECT) if (frag or merge) else CLEAN
        elif frag or merge or dom_a < 0 or dom_b < 0:
            label = INCORRECT
        else:
            label = MERGE_MISSED if dom_a == dom_b else FRAG_MISSED
        length = max(_run_length(seg_a[::-1], dom_a), _run_length(seg_b, dom_b))
        cases.append(
            HandoverCase(
                t.labels[t.ident[k]],
                (int(t.camera[k]), int(t.camera[k + 1])),
                (int(t.frame[k]), int(t.frame[k + 1])),
                label,
                length,
            )
        )
    hist = {c: 0 for c in CASES}
    for case in cases:
        hist[case.classification] += 1
    return HandoverReport(tuple(cases), hist)


@dataclass(frozen=True)
class CameraRow:
    """One line of the per-camera table; ``camera`` is None for all cameras."""

    camera: int | None
    id: IdScores
    events: EventScores
    match: TruthToResultMatch


def evaluate_row(scenario: Scenario, camera: int | None, mota_mismatches: str = "phi") -> CameraRow:
    match = match_truth_to_result(scenario)
    return CameraRow(camera, id_scores(match), evaluate_events(scenario, mota_mismatches).scores, match)


def per_camera_report(scenario: Scenario, mota_mismatches: str = "phi", global_row: CameraRow | None = None) -> list[CameraRow]:
    """One row per camera (evaluated on that camera alone) plus the global row last."""
    rows = [
        evaluate_row(restrict_to_camera(scenario, cam), cam, mota_mismatches) for cam in sorted(scenario.cameras)
    ]
    rows.append(global_row or evaluate_row(scenario, None, mota_mismatches))
    return rows
