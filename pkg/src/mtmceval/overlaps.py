"""Vectorized join of truth and computed detections on their (camera, frame) site."""

from __future__ import annotations

from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from .geometry import IOU, distance_many, iou_many

if TYPE_CHECKING:
    from .model import Scenario

# Upper bound on candidate pairs materialized at once; keeps memory flat on
# crowded scenes.
CHUNK_PAIRS = 2_000_000


class HitPairs(NamedTuple):
    """Simultaneous (truth row, computed row) pairs that do not miss.

    ``quality`` is the IoU (iou mode) or the distance in meters (ground
    mode). Pairs are ordered by site, then truth row, then computed row;
    ``site`` is a dense integer key that increases with camera, then frame,
    and consecutive frames of one camera differ by exactly one.
    """

    t_row: np.ndarray
    c_row: np.ndarray
    quality: np.ndarray
    site: np.ndarray


def site_keys(scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    t, c = scenario.truth, scenario.computed
    cams = np.union1d(t.camera, c.camera)
    frames = np.concatenate([t.frame, c.frame])
    # the +2 leaves a gap so the last frame of one camera never touches
    # the first frame of the next
    span = np.int64(frames.max() + 2) if frames.size else np.int64(2)
    tk = np.searchsorted(cams, t.camera).astype(np.int64) * span + t.frame
    ck = np.searchsorted(cams, c.camera).astype(np.int64) * span + c.frame
    return tk, ck


def hit_pairs(scenario: Scenario, chunk: int = CHUNK_PAIRS) -> HitPairs:
    t, c = scenario.truth, scenario.computed
    empty = np.zeros(0, np.int64)
    if not len(t) or not len(c):
        return HitPairs(empty, empty.copy(), np.zeros(0), empty.copy())
    overlap = scenario.overlap
    tk, ck = site_keys(scenario)
    corder = np.argsort(ck, kind="stable")
    cks = ck[corder]
    lo = np.searchsorted(cks, tk, "left")
    cnt = np.searchsorted(cks, tk, "right") - lo

    csum = np.cumsum(cnt)
    cuts = np.searchsorted(csum, np.arange(chunk, csum[-1] + chunk, chunk), "left") + 1
    starts = np.concatenate([[0], np.minimum(cuts, len(tk))])
    starts = np.unique(starts)
    if starts[-1] != len(tk):
        starts = np.append(starts, len(tk))

    out_t, out_c, out_q = [], [], []
    for a, b in zip(starts[:-1], starts[1:]):
        n = cnt[a:b]
        tot = int(n.sum())
        if tot == 0:
            continue
        tr = np.repeat(np.arange(a, b, dtype=np.int64), n)
        offs = np.arange(tot, dtype=np.int64) - np.repeat(np.cumsum(n) - n, n)
        cr = corder[np.repeat(lo[a:b], n) + offs]
        if overlap.mode == IOU:
            q = iou_many(t.box[tr], c.box[cr])
            keep = q >= overlap.delta
        else:
            q = distance_many(t.world[tr], c.world[cr])
            keep = q <= overlap.delta
        out_t.append(tr[keep])
        out_c.append(cr[keep])
        out_q.append(q[keep])
    if not out_t:
        return HitPairs(empty, empty.copy(), np.zeros(0), empty.copy())
    tr = np.concatenate(out_t)
    cr = np.concatenate(out_c)
    q = np.concatenate(out_q)
    site = tk[tr]
    order = np.lexsort((cr, tr, site))
    return HitPairs(tr[order], cr[order], q[order], site[order])
