"""Deterministic scenario generation.

Figure presets rebuild the small textbook cases (one identity split into
fragments, a handover spoiled by a one-frame fragment). ``random_scenario``
draws multi-camera ground truth on a ground plane and corrupts a copy of
it with known operators.

Randomness comes only from ``numpy.random.Generator(PCG64(seed))``; PCG64
is a fixed 128-bit-state permuted congruential generator whose streams are
stable across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ValidationError
from .geometry import GROUND, IOU, Homography, Overlap
from .model import Camera, DetectionTable, Scenario, build_scenario, concat_tables

# Ground-plane layout used by random scenarios: cameras tile the x axis.
CAMERA_WIDTH = 20.0
SCENE_DEPTH = 10.0
PIXELS_PER_METER = 40.0
BOX_W = 40.0
BOX_H = 100.0


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


# -- corruption operators ----------------------------------------------------


def _code(table: DetectionTable, identity: str) -> int:
    try:
        return table.labels.index(str(identity))
    except ValueError:
        raise ValidationError(f"unknown identity {identity!r}") from None


def _check_range(table: DetectionTable, code: int, start: int, end: int, identity: str) -> None:
    frames = table.frame[table.ident == code]
    if start > end or start < frames.min() or end > frames.max():
        raise ValidationError(
            f"frame range {start}-{end} outside trajectory {identity!r} span {frames.min()}-{frames.max()}"
        )


def _with(table: DetectionTable, **cols) -> DetectionTable:
    base = dict(
        camera=table.camera, frame=table.frame, ident=table.ident,
        labels=table.labels, box=table.box, world=table.world,
    )
    base.update(cols)
    return DetectionTable(**base)


def _new_label(table: DetectionTable, label: str) -> tuple[DetectionTable, int]:
    label = str(label)
    if label in table.labels:
        raise ValidationError(f"identity {label!r} already exists")
    return _with(table, labels=table.labels + (label,)), len(table.labels)


@dataclass(frozen=True)
class Fragment:
    """From ``at`` onward, ``identity`` is reported as ``new_id``."""

    identity: str
    at: int
    new_id: str

    def apply(self, table: DetectionTable, rng: np.random.Generator) -> DetectionTable:
        code = _code(table, self.identity)
        _check_range(table, code, self.at, self.at, self.identity)
        table, new = _new_label(table, self.new_id)
        ident = np.where((table.ident == code) & (table.frame >= self.at), new, table.ident)
        return _with(table, ident=ident)


@dataclass(frozen=True)
class Merge:
    """``id_b`` is reported as ``id_a``. The two must never share a site."""

    id_a: str
    id_b: str

    def apply(self, table: DetectionTable, rng: np.random.Generator) -> DetectionTable:
        a, b = _code(table, self.id_a), _code(table, self.id_b)
        sa = table.ident == a
        sb = table.ident == b
        sites_a = set(zip(table.camera[sa].tolist(), table.frame[sa].tolist()))
        if any(s in sites_a for s in zip(table.camera[sb].tolist(), table.frame[sb].tolist())):
            raise ValidationError(f"cannot merge {self.id_b!r} into {self.id_a!r}: shared sites")
        return _with(table, ident=np.where(sb, a, table.ident)).compact()


@dataclass(frozen=True)
class Flip:
    """Swap the labels of two identities over frames ``start``..``end``."""

    id_a: str
    id_b: str
    start: int
    end: int

    def apply(self, table: DetectionTable, rng: np.random.Generator) -> DetectionTable:
        a, b = _code(table, self.id_a), _code(table, self.id_b)
        _check_range(table, a, self.start, self.end, self.id_a)
        _check_range(table, b, self.start, self.end, self.id_b)
        inside = (table.frame >= self.start) & (table.frame <= self.end)
        ident = table.ident.copy()
        ident[inside & (table.ident == a)] = b
        ident[inside & (table.ident == b)] = a
        return _with(table, ident=ident)


@dataclass(frozen=True)
class Drop:
    """Remove ``identity``'s detections over frames ``start``..``end``."""

    identity: str
    start: int
    end: int

    def apply(self, table: DetectionTable, rng: np.random.Generator) -> DetectionTable:
        code = _code(table, self.identity)
        _check_range(table, code, self.start, self.end, self.identity)
        gone = (table.ident == code) & (table.frame >= self.start) & (table.frame <= self.end)
        return table.take(np.flatnonzero(~gone)).compact()


@dataclass(frozen=True)
class Spurious:
    """A new identity standing still in one camera over ``start``..``end``.

    Its position is a ``box`` (left, top, width, height), a ``world`` point,
    or both.
    """

    camera: int
    start: int
    end: int
    new_id: str
    box: tuple[float, float, float, float] | None = None
    world: tuple[float, float] | None = None

    def apply(self, table: DetectionTable, rng: np.random.Generator) -> DetectionTable:
        if self.start > self.end:
            raise ValidationError(f"empty frame range {self.start}-{self.end}")
        if self.box is None and self.world is None:
            raise ValidationError("spurious track needs a box or a world point")
        n = self.end - self.start + 1
        box = np.full((n, 4), np.nan)
        world = np.full((n, 2), np.nan)
        if self.box is not None:
            box[:] = self.box
        if self.world is not None:
            world[:] = self.world
        table, code = _new_label(table, self.new_id)
        return _with(
            table,
            camera=np.concatenate([table.camera, np.full(n, self.camera, np.int64)]),
            frame=np.concatenate([table.frame, np.arange(self.start, self.end + 1, dtype=np.int64)]),
            ident=np.concatenate([table.ident, np.full(n, code, np.int64)]),
            box=np.concatenate([table.box, box]),
            world=np.concatenate([table.world, world]),
        )


@dataclass(frozen=True)
class Jitter:
    """Uniform noise of at most ``amount`` meters on world points and the
    matching pixel amount on box positions."""

    amount: float

    def apply(self, table: DetectionTable, rng: np.random.Generator) -> DetectionTable:
        if self.amount < 0:
            raise ValidationError("jitter amount must be non-negative")
        if self.amount == 0 or not len(table):
            return table
        n = len(table)
        dw = rng.uniform(-self.amount, self.amount, (n, 2))
        box = table.box.copy()
        box[:, :2] += dw * PIXELS_PER_METER
        return _with(table, box=box, world=table.world + dw)


@dataclass(frozen=True)
class CorruptionSpec:
    """An ordered list of operators applied with one seeded generator."""

    operators: tuple
    seed: int = 0

    def apply(self, table: DetectionTable) -> DetectionTable:
        rng = _rng(self.seed)
        for op in self.operators:
            table = op.apply(table, rng)
        return table


def corrupt(scenario: Scenario, spec: CorruptionSpec) -> Scenario:
    """A scenario whose computed side is ``spec`` applied to its computed side.

    The truth side is passed through unchanged.
    """
    computed = spec.apply(scenario.computed)
    # frames are already on the global timeline; don't re-apply offsets
    plain = {c: Camera(info.homography) for c, info in scenario.cameras.items()}
    rebuilt = build_scenario(scenario.truth, computed, plain, scenario.overlap)
    return Scenario(rebuilt.truth, rebuilt.computed, scenario.cameras, scenario.overlap)


# -- figure presets ----------------------------------------------------------


def _figure_rows(segments, camera_of=lambda f: 1):
    """Rows along the canonical path; ``segments`` is [(identity, first, last)]."""
    cams, frames, ids, boxes, worlds = [], [], [], [], []
    for ident, first, last in segments:
        for f in range(first, last + 1):
            cams.append(camera_of(f))
            frames.append(f)
            ids.append(ident)
            boxes.append((100.0 + 4.0 * f, 200.0, BOX_W, BOX_H))
            worlds.append((float(f), 0.0))
    return DetectionTable.from_columns(cams, frames, ids, boxes, worlds)


def _overlap(mode: str, delta: float | None) -> Overlap:
    return Overlap.parse(mode, delta)


FIGURE1_SEGMENTS = {
    "a": [("1", 1, 60), ("2", 61, 90)],
    # eight fragments, seven switches; identity 1 holds 60 of 90 frames
    "b": [("1", 1, 15), ("2", 16, 22), ("1", 23, 37), ("2", 38, 45),
          ("1", 46, 60), ("2", 61, 67), ("1", 68, 82), ("2", 83, 90)],
    # eight fragments, seven switches; identity 1 holds 75 of 90 frames
    "c": [("1", 1, 19), ("2", 20, 23), ("1", 24, 42), ("2", 43, 46),
          ("1", 47, 65), ("2", 66, 69), ("1", 70, 87), ("2", 88, 90)],
}


def make_figure1(case: str, mode: str = IOU, delta: float | None = None) -> Scenario:
    """One true identity A over frames 1-90, split by the tracker into 1 and 2."""
    if case not in FIGURE1_SEGMENTS:
        raise ValidationError(f"unknown figure 1 case {case!r}")
    truth = _figure_rows([("A", 1, 90)])
    computed = _figure_rows(FIGURE1_SEGMENTS[case])
    return build_scenario(truth, computed, {1: Camera()}, _overlap(mode, delta))


# Camera I sees frames 1-45, camera II frames 51-95 (a blind spot in between).
FIG2_CAM1 = (1, 45)
FIG2_CAM2 = (51, 95)

FIGURE2_SEGMENTS = {
    # correct handover, but the last frame in camera I is labeled 2
    "a": [("1", 1, 44), ("2", 45, 45), ("1", 51, 95)],
    # wrong handover, but the first frame in camera II is labeled 1
    "b": [("1", 1, 45), ("1", 51, 51), ("2", 52, 95)],
}


def make_figure2(case: str, mode: str = IOU, delta: float | None = None) -> Scenario:
    if case not in FIGURE2_SEGMENTS:
        raise ValidationError(f"unknown figure 2 case {case!r}")

    def camera_of(f):
        return 1 if f <= FIG2_CAM1[1] else 2

    truth = _figure_rows([("A", *FIG2_CAM1), ("A", *FIG2_CAM2)], camera_of)
    computed = _figure_rows(FIGURE2_SEGMENTS[case], camera_of)
    return build_scenario(truth, computed, {1: Camera(), 2: Camera()}, _overlap(mode, delta))


PRESETS = ("fig1a", "fig1b", "fig1c", "fig2a", "fig2b")


def make_preset(name: str, mode: str = IOU, delta: float | None = None) -> Scenario:
    if name in ("fig1a", "fig1b", "fig1c"):
        return make_figure1(name[-1], mode, delta)
    if name in ("fig2a", "fig2b"):
        return make_figure2(name[-1], mode, delta)
    raise ValidationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)} or random")


# -- random scenarios --------------------------------------------------------


@dataclass(frozen=True)
class RandomParams:
    cameras: int = 2
    identities: int = 10
    frames: int = 200
    mean_length: float = 60.0
    overlap: float = 0.0
    fragment_rate: float = 0.0
    merge_rate: float = 0.0
    flip_rate: float = 0.0
    drop_rate: float = 0.0
    spurious_rate: float = 0.0
    jitter: float = 0.0
    mode: str = IOU
    delta: float | None = None

    def validate(self) -> None:
        if self.cameras < 1 or self.identities < 0 or self.frames < 2 or self.mean_length < 1:
            raise ValidationError("cameras, frames and mean_length must be positive")
        if not 0.0 <= self.overlap <= 1.0:
            raise ValidationError(f"overlap fraction must lie in [0, 1], got {self.overlap}")
        for name in ("fragment_rate", "merge_rate", "flip_rate", "drop_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {rate}")
        if self.spurious_rate < 0 or self.jitter < 0:
            raise ValidationError("spurious_rate and jitter must be non-negative")


class RandomScenario(NamedTuple):
    clean: Scenario
    corrupted: Scenario
    operators: tuple


def camera_homography(k: int, overlap: float) -> Homography:
    """Image foot point (u, v) -> ground (x, y) for camera ``k`` (1-based)."""
    origin = (k - 1) * CAMERA_WIDTH - overlap * CAMERA_WIDTH / 2.0
    s = 1.0 / PIXELS_PER_METER
    return Homography((s, 0.0, origin, 0.0, s, -BOX_H * s, 0.0, 0.0, 1.0))


def _truth_table(p: RandomParams, rng: np.random.Generator) -> DetectionTable:
    half = p.overlap * CAMERA_WIDTH / 2.0
    width = p.cameras * CAMERA_WIDTH
    cams, frames, ids, worlds = [], [], [], []
    for k in range(p.identities):
        length = int(np.clip(rng.poisson(p.mean_length), 2, p.frames))
        start = int(rng.integers(0, p.frames - length + 1))
        way = rng.uniform([0.0, 0.0], [width, SCENE_DEPTH], (3, 2))
        s = np.linspace(0.0, 2.0, length)
        xy = np.column_stack([np.interp(s, [0, 1, 2], way[:, 0]), np.interp(s, [0, 1, 2], way[:, 1])])
        f = np.arange(start, start + length, dtype=np.int64)
        for c in range(p.cameras):
            lo, hi = c * CAMERA_WIDTH - half, (c + 1) * CAMERA_WIDTH + half
            vis = (xy[:, 0] >= lo) & (xy[:, 0] < hi)
            if c == p.cameras - 1:
                vis |= xy[:, 0] >= hi
            n = int(vis.sum())
            if not n:
                continue
            cams.append(np.full(n, c + 1, np.int64))
            frames.append(f[vis])
            ids.append(np.full(n, k + 1, np.int64))
            worlds.append(xy[vis])
    if not cams:
        return DetectionTable.empty()
    cam = np.concatenate(cams)
    world = np.concatenate(worlds)
    ident = np.concatenate(ids)
    origin = (cam - 1) * CAMERA_WIDTH - half
    u = (world[:, 0] - origin) * PIXELS_PER_METER
    v = world[:, 1] * PIXELS_PER_METER + BOX_H
    box = np.column_stack([u - BOX_W / 2.0, v - BOX_H, np.full(len(u), BOX_W), np.full(len(u), BOX_H)])
    return DetectionTable.from_columns(cam, np.concatenate(frames), ident.astype(str), box, world)


def _span(table: DetectionTable, code: int) -> tuple[int, int]:
    f = table.frame[table.ident == code]
    return int(f.min()), int(f.max())


def _spans(table: DetectionTable) -> tuple[np.ndarray, np.ndarray]:
    first = np.full(len(table.labels), np.iinfo(np.int64).max)
    last = np.full(len(table.labels), -1)
    np.minimum.at(first, table.ident, table.frame)
    np.maximum.at(last, table.ident, table.frame)
    return first, last


def _corrupt_random(p: RandomParams, truth: DetectionTable, rng: np.random.Generator):
    """Draw and apply corruption operators; returns (computed table, operators)."""
    ops: list = []
    next_id = p.identities + 1
    first, last = _spans(truth)

    local = []
    for k, label in enumerate(truth.labels):
        a, b = int(first[k]), int(last[k])
        # drops stay interior so both endpoints (and any fragment point) survive
        if p.drop_rate and rng.random() < p.drop_rate and b - a >= 2:
            s = int(rng.integers(a + 1, b))
            e = min(b - 1, s + max(1, (b - a) // 5))
            local.append(Drop(label, s, e))
        if p.fragment_rate and rng.random() < p.fragment_rate and b > a:
            local.append(Fragment(label, int(rng.integers(a + 1, b + 1)), str(next_id)))
            next_id += 1
    table = _apply_local(truth, local, rng)
    ops.extend(local)

    # pairwise operators see the current labels and spans
    for label in truth.labels:
        if p.flip_rate and rng.random() < p.flip_rate and label in table.labels:
            first, last = _spans(table)
            k = table.labels.index(label)
            j = int(rng.integers(0, len(table.labels)))
            lo, hi = max(first[k], first[j]), min(last[k], last[j])
            if j != k and lo < hi:
                s = int(rng.integers(lo, hi + 1))
                op = Flip(label, table.labels[j], s, int(rng.integers(s, hi + 1)))
                table = op.apply(table, rng)
                ops.append(op)
        if p.merge_rate and rng.random() < p.merge_rate and label in table.labels:
            first, last = _spans(table)
            k = table.labels.index(label)
            j = int(rng.integers(0, len(table.labels)))
            if j != k and (last[j] < first[k] or last[k] < first[j]):
                op = Merge(label, table.labels[j])
                table = op.apply(table, rng)
                ops.append(op)
    for c in range(1, p.cameras + 1):
        for _ in range(int(rng.poisson(p.spurious_rate)) if p.spurious_rate else 0):
            s = int(rng.integers(0, p.frames))
            e = min(p.frames - 1, s + int(rng.integers(1, max(2, int(p.mean_length)))))
            x = float(rng.uniform(0.0, CAMERA_WIDTH))
            y = float(rng.uniform(0.0, SCENE_DEPTH))
            op = _spurious(c, s, e, x, y, p, str(next_id))
            next_id += 1
            table = op.apply(table, rng)
            ops.append(op)
    if p.jitter:
        op = Jitter(p.jitter)
        table = op.apply(table, rng)
        ops.append(op)
    return table, tuple(ops)


def _spurious(camera: int, start: int, end: int, x: float, y: float, p: RandomParams, new_id: str) -> Spurious:
    """Spurious track at local camera coordinate ``x`` (meters) and depth ``y``."""
    u = x * PIXELS_PER_METER
    v = y * PIXELS_PER_METER + BOX_H
    origin = camera_homography(camera, p.overlap).values[2]
    return Spurious(camera, start, end, new_id, (u - BOX_W / 2.0, v - BOX_H, BOX_W, BOX_H), (x + origin, y))


def _apply_local(table: DetectionTable, ops, rng) -> DetectionTable:
    """Apply single-identity operators one identity at a time (fast on large tables)."""
    if not ops:
        return table
    by_label: dict[str, list] = {}
    for op in ops:
        by_label.setdefault(op.identity, []).append(op)
    order = np.argsort(table.ident, kind="stable")
    bounds = np.concatenate([[0], np.cumsum(np.bincount(table.ident, minlength=len(table.labels)))])
    parts = []
    for code, label in enumerate(table.labels):
        part = table.take(order[bounds[code] : bounds[code + 1]])
        part = _with(part, ident=np.zeros(len(part), np.int64), labels=(label,))
        for op in by_label.get(label, ()):
            part = op.apply(part, rng)
        parts.append(part)
    return concat_tables(parts)


def random_scenario(params: RandomParams, seed: int) -> RandomScenario:
    """Random multi-camera ground truth and a corrupted tracker output.

    Identities walk piecewise-linear ground paths across cameras that tile
    the x axis; ``overlap`` widens each field of view into its neighbours.
    Rates are per-trajectory probabilities, except ``spurious_rate`` (mean
    spurious tracks per camera) and ``jitter`` (meters).
    """
    params.validate()
    rng = _rng(seed)
    truth = _truth_table(params, rng)
    cameras = {k: Camera(camera_homography(k, params.overlap)) for k in range(1, params.cameras + 1)}
    overlap = Overlap.parse(params.mode, params.delta)
    computed, ops = _corrupt_random(params, truth, rng)
    clean = build_scenario(truth, truth, cameras, overlap)
    corrupted = build_scenario(truth, computed, cameras, overlap)
    return RandomScenario(clean, corrupted, ops)
