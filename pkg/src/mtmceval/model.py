"""Trajectory data model: detections, sites, trajectories and scenarios.

Detections are held column-wise in a :class:`DetectionTable` so scenarios
with millions of rows stay cheap; :class:`Detection` and :class:`Trajectory`
are the row and per-identity views of the same data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np
import pandas as pd

from .errors import DuplicateDetectionError, ValidationError
from .geometry import GROUND, IOU, Homography, Overlap, project_many

TRUTH = "truth"
COMPUTED = "computed"


class Site(NamedTuple):
    camera: int
    frame: int


@dataclass(frozen=True)
class Detection:
    camera: int
    frame: int
    identity: str
    box: tuple[float, float, float, float] | None = None
    world: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "identity", str(self.identity))
        if self.box is None and self.world is None:
            raise ValidationError(f"detection {self.describe()} has neither box nor world point")
        if self.box is not None:
            box = tuple(float(x) for x in self.box)
            if len(box) != 4 or not all(math.isfinite(x) for x in box):
                raise ValidationError(f"detection {self.describe()} has a malformed box")
            if box[2] <= 0 or box[3] <= 0:
                raise ValidationError(f"detection {self.describe()} has non-positive box size")
            object.__setattr__(self, "box", box)
        if self.world is not None:
            world = tuple(float(x) for x in self.world)
            if len(world) != 2 or not all(math.isfinite(x) for x in world):
                raise ValidationError(f"detection {self.describe()} has a malformed world point")
            object.__setattr__(self, "world", world)

    @property
    def site(self) -> Site:
        return Site(self.camera, self.frame)

    def describe(self) -> str:
        return f"(identity {self.identity!r}, camera {self.camera}, frame {self.frame})"


@dataclass(frozen=True)
class Camera:
    homography: Homography | None = None
    frame_offset: int = 0


@dataclass(frozen=True, eq=False)
class DetectionTable:
    """Column store of detections.

    ``ident`` holds integer codes into ``labels``; absent boxes and world
    points are rows of NaN.
    """

    camera: np.ndarray
    frame: np.ndarray
    ident: np.ndarray
    labels: tuple[str, ...]
    box: np.ndarray
    world: np.ndarray

    @classmethod
    def empty(cls) -> DetectionTable:
        z = np.zeros(0, np.int64)
        return cls(z, z.copy(), z.copy(), (), np.zeros((0, 4)), np.zeros((0, 2)))

    @classmethod
    def from_columns(cls, camera, frame, identity, box=None, world=None) -> DetectionTable:
        """Build from raw columns; identity codes follow first appearance."""
        identity = np.asarray(identity, dtype=object)
        n = len(identity)
        if n == 0:
            return cls.empty()
        codes, uniques = pd.factorize(pd.Series(identity).astype(str), sort=False)
        box = np.full((n, 4), np.nan) if box is None else np.asarray(box, dtype=float).reshape(n, 4)
        world = np.full((n, 2), np.nan) if world is None else np.asarray(world, dtype=float).reshape(n, 2)
        return cls(
            np.asarray(camera, dtype=np.int64),
            np.asarray(frame, dtype=np.int64),
            codes.astype(np.int64),
            tuple(str(u) for u in uniques),
            box,
            world,
        )

    @classmethod
    def from_detections(cls, detections: Iterable[Detection]) -> DetectionTable:
        if isinstance(detections, DetectionTable):
            return detections
        dets = list(detections)
        if not dets:
            return cls.empty()
        nan4 = (math.nan,) * 4
        nan2 = (math.nan,) * 2
        return cls.from_columns(
            [d.camera for d in dets],
            [d.frame for d in dets],
            [d.identity for d in dets],
            [d.box if d.box is not None else nan4 for d in dets],
            [d.world if d.world is not None else nan2 for d in dets],
        )

    def __len__(self) -> int:
        return len(self.ident)

    def row(self, i: int) -> Detection:
        box = self.box[i]
        world = self.world[i]
        return Detection(
            int(self.camera[i]),
            int(self.frame[i]),
            self.labels[self.ident[i]],
            None if np.isnan(box).any() else tuple(box.tolist()),
            None if np.isnan(world).any() else tuple(world.tolist()),
        )

    def __getitem__(self, i: int) -> Detection:
        return self.row(i)

    def __iter__(self) -> Iterator[Detection]:
        return (self.row(i) for i in range(len(self)))

    @property
    def identities(self) -> np.ndarray:
        """Identity label per row."""
        return np.asarray(self.labels, dtype=object)[self.ident] if len(self) else np.zeros(0, object)

    def take(self, idx) -> DetectionTable:
        return DetectionTable(
            self.camera[idx], self.frame[idx], self.ident[idx], self.labels, self.box[idx], self.world[idx]
        )

    def compact(self) -> DetectionTable:
        """Drop labels with no rows and renumber codes, keeping label order."""
        used = np.zeros(len(self.labels), bool)
        used[self.ident] = True
        if used.all():
            return self
        remap = np.cumsum(used) - 1
        labels = tuple(lbl for lbl, u in zip(self.labels, used) if u)
        return DetectionTable(self.camera, self.frame, remap[self.ident], labels, self.box, self.world)

    def equals(self, other: DetectionTable) -> bool:
        return (
            self.labels == other.labels
            and np.array_equal(self.camera, other.camera)
            and np.array_equal(self.frame, other.frame)
            and np.array_equal(self.ident, other.ident)
            and np.array_equal(self.box, other.box, equal_nan=True)
            and np.array_equal(self.world, other.world, equal_nan=True)
        )


@dataclass(frozen=True)
class Trajectory:
    identity: str
    side: str
    detections: Mapping[Site, Detection]

    def __len__(self) -> int:
        return len(self.detections)

    @property
    def sites(self) -> list[Site]:
        return list(self.detections)


@dataclass(frozen=True, eq=False)
class Scenario:
    """A validated evaluation instance.

    Build with :func:`build_scenario`. Both tables are sorted by identity
    code, then frame, then camera, so each trajectory is a contiguous,
    time-ordered block of rows.
    """

    truth: DetectionTable
    computed: DetectionTable
    cameras: Mapping[int, Camera]
    overlap: Overlap = field(default_factory=Overlap)

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.overlap == other.overlap
            and dict(self.cameras) == dict(other.cameras)
            and self.truth.equals(other.truth)
            and self.computed.equals(other.computed)
        )

    __hash__ = None

    def table(self, side: str) -> DetectionTable:
        return self.truth if side == TRUTH else self.computed

    @cached_property
    def truth_lengths(self) -> np.ndarray:
        return np.bincount(self.truth.ident, minlength=len(self.truth.labels))

    @cached_property
    def computed_lengths(self) -> np.ndarray:
        return np.bincount(self.computed.ident, minlength=len(self.computed.labels))

    @property
    def T(self) -> int:
        """Total number of true detections."""
        return len(self.truth)

    @cached_property
    def truth_trajectories(self) -> tuple[Trajectory, ...]:
        return _trajectories(self.truth, TRUTH)

    @cached_property
    def computed_trajectories(self) -> tuple[Trajectory, ...]:
        return _trajectories(self.computed, COMPUTED)

    def trajectories(self, side: str) -> tuple[Trajectory, ...]:
        return self.truth_trajectories if side == TRUTH else self.computed_trajectories

    def restrict_to_camera(self, camera: int) -> Scenario:
        return restrict_to_camera(self, camera)

    def swapped(self) -> Scenario:
        """The same scenario with truth and computed sides exchanged."""
        return Scenario(self.computed, self.truth, self.cameras, self.overlap)

    def rows(self, side: str) -> list[Detection]:
        return list(self.table(side))

    @cached_property
    def hits(self):
        """Simultaneous truth/computed detection pairs that overlap within delta."""
        from .overlaps import hit_pairs

        return hit_pairs(self)


def _trajectories(table: DetectionTable, side: str) -> tuple[Trajectory, ...]:
    bounds = np.concatenate([[0], np.cumsum(np.bincount(table.ident, minlength=len(table.labels)))])
    out = []
    for code, label in enumerate(table.labels):
        dets = {}
        for i in range(bounds[code], bounds[code + 1]):
            det = table.row(i)
            dets[det.site] = det
        out.append(Trajectory(label, side, dets))
    return tuple(out)


def _sort_table(table: DetectionTable) -> DetectionTable:
    order = np.lexsort((table.camera, table.frame, table.ident))
    return table.take(order)


def _check_duplicates(table: DetectionTable, side: str) -> None:
    if len(table) < 2:
        return
    order = np.lexsort((table.frame, table.camera, table.ident))
    keys = np.column_stack([table.ident[order], table.camera[order], table.frame[order]])
    same = np.all(keys[1:] == keys[:-1], axis=1)
    if same.any():
        k = int(np.flatnonzero(same)[0])
        first, second = sorted((int(order[k]), int(order[k + 1])))
        det = table.row(second)
        raise DuplicateDetectionError(
            f"{side} row {second + 1} {det.describe()} duplicates row {first + 1}"
        )


def _validate_geometry(table: DetectionTable, side: str, cameras: Mapping[int, Camera], overlap: Overlap):
    """Check boxes, fill derivable world points; returns the table (maybe updated)."""
    has_box = ~np.isnan(table.box).any(axis=1)
    has_world = ~np.isnan(table.world).any(axis=1)
    bad_box = has_box & ((table.box[:, 2] <= 0) | (table.box[:, 3] <= 0) | ~np.isfinite(table.box).all(axis=1))
    if bad_box.any():
        k = int(np.flatnonzero(bad_box)[0])
        raise ValidationError(f"{side} row {k + 1}: box must have positive width and height")
    neither = ~has_box & ~has_world
    if neither.any():
        k = int(np.flatnonzero(neither)[0])
        raise ValidationError(f"{side} row {k + 1}: detection has neither box nor world point")
    if (table.frame < 0).any():
        k = int(np.flatnonzero(table.frame < 0)[0])
        raise ValidationError(f"{side} row {k + 1}: frame {table.frame[k]} is negative")

    if overlap.mode == IOU:
        if not has_box.all():
            k = int(np.flatnonzero(~has_box)[0])
            raise ValidationError(f"{side} row {k + 1}: IoU mode requires a box (first offender)")
        return table

    world = table.world
    need = ~has_world
    if need.any():
        world = world.copy()
        for cam, info in cameras.items():
            sel = need & (table.camera == cam) & has_box
            if info.homography is None or not sel.any():
                continue
            b = table.box[sel]
            feet = np.column_stack([b[:, 0] + b[:, 2] / 2.0, b[:, 1] + b[:, 3]])
            world[sel] = project_many(info.homography, feet)
        missing = np.isnan(world).any(axis=1)
        if missing.any():
            k = int(np.flatnonzero(missing)[0])
            raise ValidationError(
                f"{side} row {k + 1}: ground mode requires a world point or a box with a camera "
                f"homography (camera {table.camera[k]}, first offender)"
            )
    return DetectionTable(table.camera, table.frame, table.ident, table.labels, table.box, world)


def build_scenario(
    truth_rows: Iterable[Detection] | DetectionTable,
    computed_rows: Iterable[Detection] | DetectionTable,
    cameras: Mapping[int, Camera] | Iterable[int] | None = None,
    overlap: Overlap | None = None,
) -> Scenario:
    """Group rows into trajectories and validate the result.

    ``cameras`` may map camera ids to :class:`Camera` metadata, list bare
    ids, or be ``None`` to accept every camera seen in the rows. Per-camera
    frame offsets are added to the frames here.
    """
    overlap = overlap or Overlap()
    truth = DetectionTable.from_detections(truth_rows)
    computed = DetectionTable.from_detections(computed_rows)

    if cameras is None:
        seen = np.union1d(np.unique(truth.camera), np.unique(computed.camera))
        cams = {int(c): Camera() for c in seen}
    elif isinstance(cameras, Mapping):
        cams = {int(k): (v if isinstance(v, Camera) else Camera(v)) for k, v in cameras.items()}
    else:
        cams = {int(c): Camera() for c in cameras}

    tables = []
    for side, table in ((TRUTH, truth), (COMPUTED, computed)):
        unknown = ~np.isin(table.camera, np.fromiter(cams, np.int64, len(cams)))
        if unknown.any():
            k = int(np.flatnonzero(unknown)[0])
            raise ValidationError(f"{side} row {k + 1}: unknown camera {table.camera[k]}")
        offsets = {c: info.frame_offset for c, info in cams.items() if info.frame_offset}
        if offsets:
            frame = table.frame.copy()
            for c, off in offsets.items():
                frame[table.camera == c] += off
            table = DetectionTable(table.camera, frame, table.ident, table.labels, table.box, table.world)
        table = _validate_geometry(table, side, cams, overlap)
        _check_duplicates(table, side)
        tables.append(_sort_table(table))
    return Scenario(tables[0], tables[1], cams, overlap)


def restrict_to_camera(scenario: Scenario, camera: int) -> Scenario:
    if camera not in scenario.cameras:
        raise ValidationError(f"unknown camera {camera}")
    tables = [
        t.take(np.flatnonzero(t.camera == camera)).compact() for t in (scenario.truth, scenario.computed)
    ]
    return Scenario(tables[0], tables[1], {camera: scenario.cameras[camera]}, scenario.overlap)


class CameraStats(NamedTuple):
    camera: int
    first_frame: int | None
    last_frame: int | None
    truth_detections: int
    computed_detections: int
    truth_identities: int
    computed_identities: int


class TimelineStats(NamedTuple):
    T: int
    cameras: tuple[CameraStats, ...]


def timeline_stats(scenario: Scenario) -> TimelineStats:
    rows = []
    for cam in sorted(scenario.cameras):
        tsel = scenario.truth.camera == cam
        csel = scenario.computed.camera == cam
        frames = np.concatenate([scenario.truth.frame[tsel], scenario.computed.frame[csel]])
        rows.append(
            CameraStats(
                cam,
                int(frames.min()) if frames.size else None,
                int(frames.max()) if frames.size else None,
                int(tsel.sum()),
                int(csel.sum()),
                len(np.unique(scenario.truth.ident[tsel])),
                len(np.unique(scenario.computed.ident[csel])),
            )
        )
    return TimelineStats(scenario.T, tuple(rows))


def flatten(scenario: Scenario) -> tuple[list[Detection], list[Detection]]:
    """Rows of both sides in canonical order, with camera frame offsets undone.

    ``build_scenario(*flatten(s), s.cameras, s.overlap) == s``.
    """
    offsets = {c: info.frame_offset for c, info in scenario.cameras.items()}
    out = []
    for side in (TRUTH, COMPUTED):
        rows = scenario.rows(side)
        if any(offsets.values()):
            rows = [replace(d, frame=d.frame - offsets[d.camera]) for d in rows]
        out.append(rows)
    return out[0], out[1]


def concat_tables(tables: Sequence[DetectionTable]) -> DetectionTable:
    """Stack tables, merging label sets by label text in first-seen order."""
    tables = [t for t in tables if len(t)]
    if not tables:
        return DetectionTable.empty()
    labels: dict[str, int] = {}
    idents = []
    for t in tables:
        remap = np.array([labels.setdefault(lbl, len(labels)) for lbl in t.labels], dtype=np.int64)
        idents.append(remap[t.ident])
    return DetectionTable(
        np.concatenate([t.camera for t in tables]),
        np.concatenate([t.frame for t in tables]),
        np.concatenate(idents),
        tuple(labels),
        np.concatenate([t.box for t in tables]),
        np.concatenate([t.world for t in tables]),
    )
