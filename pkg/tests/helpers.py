"""Scenario generators and brute-force oracles shared by the test modules.

The oracles deliberately avoid the package's vectorized paths: they work on
:class:`Trajectory` dicts and enumerate every candidate explicitly.
"""

from __future__ import annotations

import itertools
from collections import defaultdict

import numpy as np

from mtmceval.geometry import IOU, Overlap, is_miss, iou, distance, pair_cost
from mtmceval.model import Camera, Detection, build_scenario

GRID = 10.0  # pixels per grid step; 20 px is one meter on the ground
BOX = (40.0, 80.0)


def _det(camera, frame, ident, x, y=0.0):
    return Detection(camera, frame, str(ident), (x, 100.0 + y, *BOX), (x / 20.0, y / 20.0))


def random_rows(
    rng: np.random.Generator,
    max_truth: int = 5,
    max_computed: int = 5,
    max_frames: int = 30,
    cameras: int = 1,
    continuous: bool = False,
    min_truth: int = 0,
):
    """Random truth rows and tracker rows that partly follow them.

    Computed trajectories copy stretches of one or two truth trajectories
    with a positional offset; grid offsets (``continuous=False``) give many
    exact ties, continuous 2-D ones make every cost distinct almost surely.
    """
    truth = []
    tracks = []
    for k in range(int(rng.integers(min_truth, max_truth + 1))):
        length = int(rng.integers(1, max_frames + 1))
        start = int(rng.integers(1, max_frames - length + 2))
        frames = [f for f in range(start, start + length) if rng.random() < 0.9] or [start]
        cam = int(rng.integers(1, cameras + 1))
        x = float(rng.integers(0, 20)) * GRID
        track = []
        for f in frames:
            if cameras > 1 and rng.random() < 0.1:
                cam = int(rng.integers(1, cameras + 1))
            x += float(rng.integers(-1, 2)) * GRID + (float(rng.uniform(-1, 1)) if continuous else 0.0)
            track.append((cam, f, x))
        tracks.append(track)
        truth.extend(_det(c, f, f"t{k}", x) for c, f, x in track)

    computed = []
    for j in range(int(rng.integers(0, max_computed + 1))):
        seen = set()
        sources = rng.integers(0, len(tracks), int(rng.integers(1, 3))) if tracks else []
        rows = []
        for s in sources:
            track = tracks[int(s)]
            a = int(rng.integers(0, len(track)))
            b = int(rng.integers(a, len(track))) + 1
            for c, f, x in track[a:b]:
                if (c, f) in seen:
                    continue
                seen.add((c, f))
                dx = float(rng.uniform(-35, 35)) if continuous else float(rng.choice([0, 0, 0, 10, 20, 30]))
                # a vertical offset too: on a single line, swapped pairings tie exactly
                dy = float(rng.uniform(-15, 15)) if continuous else 0.0
                rows.append(_det(c, f, f"c{j}", x + dx, dy))
        if rng.random() < 0.3 or not rows:
            c = int(rng.integers(1, cameras + 1))
            for f in range(1, int(rng.integers(2, 6))):
                if (c, f) not in seen:
                    seen.add((c, f))
                    rows.append(_det(c, f, f"c{j}", float(rng.uniform(0, 200))))
        computed.extend(rows)
    return truth, computed


def random_scenario(rng, mode=IOU, delta=None, cameras=1, **kw):
    truth, computed = random_rows(rng, cameras=cameras, **kw)
    return build_scenario(truth, computed, {c: Camera() for c in range(1, cameras + 1)}, Overlap.parse(mode, delta))


# -- oracles -------------------------------------------------------------------


def brute_force_assignment(m) -> float:
    """Minimum over all injections of the smaller side into the larger."""
    m = np.asarray(m)
    if m.shape[0] > m.shape[1]:
        m = m.T
    n, k = m.shape
    if n == 0:
        return 0
    return min(sum(m[r, c] for r, c in zip(range(n), cols)) for cols in itertools.permutations(range(k), n))


def exhaustive_id_cost(scenario) -> int:
    """Minimum IDFN + IDFP over every partial one-to-one pairing of
    truth and computed trajectories; unpaired ones cost their full length."""
    truths = scenario.truth_trajectories
    comps = scenario.computed_trajectories
    cost = [[pair_cost(t, c, scenario.overlap).total for c in comps] for t in truths]
    len_t = [len(t) for t in truths]
    len_c = [len(c) for c in comps]
    best = sum(len_t) + sum(len_c)

    def rec(i, used, acc):
        nonlocal best
        if i == len(truths):
            best = min(best, acc + sum(len_c[j] for j in range(len(comps)) if j not in used))
            return
        rec(i + 1, used, acc + len_t[i])
        for j in range(len(comps)):
            if j not in used:
                rec(i + 1, used | {j}, acc + cost[i][j])

    rec(0, frozenset(), 0)
    return best


def _quality(overlap: Overlap, a: Detection, b: Detection) -> float:
    return 1.0 - iou(a.box, b.box) if overlap.mode == IOU else distance(a.world, b.world)


def clear_oracle(scenario):
    """Per-site CLEAR matching by exhaustive search.

    Returns {site: {truth label: computed label}}. Previous-frame pairs that
    still hit are kept; the rest is matched by maximum cardinality, then
    minimum total cost, over every partial injection.
    """
    overlap = scenario.overlap
    by_site = defaultdict(lambda: ({}, {}))
    for d in scenario.rows("truth"):
        by_site[d.site][0][d.identity] = d
    for d in scenario.rows("computed"):
        by_site[d.site][1][d.identity] = d
    result = {}
    prev: dict = {}
    for site in sorted(by_site):
        tdets, cdets = by_site[site]
        carry = prev.get((site.camera, site.frame - 1), {})
        cur = {}
        for t, c in carry.items():
            if t in tdets and c in cdets and not is_miss(tdets[t], cdets[c], overlap):
                cur[t] = c
        free_t = [t for t in tdets if t not in cur]
        used_c = set(cur.values())
        free_c = [c for c in cdets if c not in used_c]
        best = (0, 0.0, {})

        def rec(i, used, acc, n, cost):
            nonlocal best
            if i == len(free_t):
                if n > best[0] or (n == best[0] and cost < best[1] - 1e-12):
                    best = (n, cost, dict(acc))
                return
            t = free_t[i]
            rec(i + 1, used, acc, n, cost)
            for c in free_c:
                if c not in used and not is_miss(tdets[t], cdets[c], overlap):
                    acc[t] = c
                    rec(i + 1, used | {c}, acc, n + 1, cost + _quality(overlap, tdets[t], cdets[c]))
                    del acc[t]

        rec(0, frozenset(), {}, 0, 0.0)
        cur.update(best[2])
        result[site] = cur
        prev[(site.camera, site.frame)] = cur
    return result


def oracle_switches(scenario, per_site):
    """(frag_within, frag_handover, merge_within, merge_handover) from a per-site mapping."""
    inverse = {s: {c: t for t, c in m.items()} for s, m in per_site.items()}

    def scan(side, mapping):
        seq = defaultdict(list)
        for d in scenario.rows(side):
            partner = mapping.get(d.site, {}).get(d.identity)
            if partner is not None:
                seq[d.identity].append((d.frame, d.camera, partner))
        w = h = 0
        for obs in seq.values():
            obs.sort()
            for (f0, c0, p0), (f1, c1, p1) in zip(obs, obs[1:]):
                if p0 != p1:
                    if c0 == c1:
                        w += 1
                    else:
                        h += 1
        return w, h

    return (*scan("truth", per_site), *scan("computed", inverse))
