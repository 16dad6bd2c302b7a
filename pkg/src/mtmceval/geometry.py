"""Spatial predicates: box IoU, ground-plane distance, homographies, misses."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from .errors import DegenerateProjectionError, ValidationError

if TYPE_CHECKING:
    from .model import Detection, Trajectory

IOU = "iou"
GROUND = "ground"


@dataclass(frozen=True)
class Overlap:
    """How two simultaneous detections are compared.

    ``iou``: miss iff IoU < delta, 0 < delta < 1.
    ``ground``: miss iff Euclidean distance on the ground plane > delta meters.
    """

    mode: str = IOU
    delta: float = 0.5

    def __post_init__(self):
        if self.mode == IOU:
            if not 0.0 < self.delta < 1.0:
                raise ValidationError(f"IoU threshold must lie in (0, 1), got {self.delta}")
        elif self.mode == GROUND:
            if not self.delta > 0.0 or not math.isfinite(self.delta):
                raise ValidationError(f"ground-plane threshold must be positive, got {self.delta}")
        else:
            raise ValidationError(f"unknown overlap mode {self.mode!r}")
        object.__setattr__(self, "delta", float(self.delta))

    @classmethod
    def iou(cls, delta: float = 0.5) -> Overlap:
        return cls(IOU, delta)

    @classmethod
    def ground(cls, delta: float = 1.0) -> Overlap:
        return cls(GROUND, delta)

    @classmethod
    def parse(cls, mode: str, delta: float | None = None) -> Overlap:
        if mode not in (IOU, GROUND):
            raise ValidationError(f"unknown overlap mode {mode!r}")
        if delta is None:
            delta = 0.5 if mode == IOU else 1.0
        return cls(mode, delta)


@dataclass(frozen=True)
class Homography:
    """3x3 image-to-ground map, stored row-major as nine floats."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(x) for x in np.asarray(self.values, dtype=float).ravel())
        if len(vals) != 9:
            raise ValidationError(f"homography needs 9 numbers, got {len(vals)}")
        if not all(math.isfinite(x) for x in vals):
            raise ValidationError("homography has a non-finite entry")
        if abs(np.linalg.det(np.array(vals).reshape(3, 3))) < 1e-12:
            raise ValidationError("homography is singular")
        object.__setattr__(self, "values", vals)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.values).reshape(3, 3)

    @classmethod
    def from_file(cls, path: str | Path) -> Homography:
        text = Path(path).read_text()
        try:
            return cls(tuple(float(tok) for tok in text.split()))
        except ValueError as exc:
            raise ValidationError(f"{path}: {exc}") from None

    def to_text(self) -> str:
        rows = [self.values[i : i + 3] for i in (0, 3, 6)]
        return "\n".join(" ".join(repr(x) for x in row) for row in rows) + "\n"


def project_to_ground(h: Homography, point) -> tuple[float, float]:
    u, v = point
    m = h.values
    x = m[0] * u + m[1] * v + m[2]
    y = m[3] * u + m[4] * v + m[5]
    w = m[6] * u + m[7] * v + m[8]
    if abs(w) < 1e-9:
        raise DegenerateProjectionError(f"image point ({u}, {v}) projects to infinity")
    return x / w, y / w


def project_many(h: Homography, points: np.ndarray) -> np.ndarray:
    """Vectorized :func:`project_to_ground` over an (n, 2) array."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    hom = np.column_stack([pts, np.ones(len(pts))]) @ h.matrix.T
    w = hom[:, 2]
    bad = np.abs(w) < 1e-9
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise DegenerateProjectionError(f"image point {tuple(pts[k])} projects to infinity")
    return hom[:, :2] / w[:, None]


def foot_point(box) -> tuple[float, float]:
    """Bottom-center of a (left, top, width, height) box."""
    left, top, width, height = box
    return left + width / 2.0, top + height


def iou(box_a, box_b) -> float:
    ax, ay, aw, ah = box_a
    bx, by, bw, bh = box_b
    iw = min(ax + aw, bx + bw) - max(ax, bx)
    ih = min(ay + ah, by + bh) - max(ay, by)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    # rounding can push the ratio a hair above 1
    return min(1.0, inter / (aw * ah + bw * bh - inter))


def iou_many(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise IoU of two (n, 4) box arrays; same arithmetic as :func:`iou`."""
    iw = np.minimum(a[:, 0] + a[:, 2], b[:, 0] + b[:, 2]) - np.maximum(a[:, 0], b[:, 0])
    ih = np.minimum(a[:, 1] + a[:, 3], b[:, 1] + b[:, 3]) - np.maximum(a[:, 1], b[:, 1])
    pos = (iw > 0) & (ih > 0)
    inter = np.where(pos, iw * ih, 0.0)
    union = a[:, 2] * a[:, 3] + b[:, 2] * b[:, 3] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(pos, np.minimum(1.0, inter / union), 0.0)


def distance(p, q) -> float:
    dx = p[0] - q[0]
    dy = p[1] - q[1]
    return math.sqrt(dx * dx + dy * dy)


def distance_many(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    dx = p[:, 0] - q[:, 0]
    dy = p[:, 1] - q[:, 1]
    return np.sqrt(dx * dx + dy * dy)


def overlap_quality(overlap: Overlap, a: Detection, b: Detection) -> float:
    """IoU (iou mode) or distance in meters (ground mode) of two detections."""
    if overlap.mode == IOU:
        if a.box is None or b.box is None:
            raise ValidationError("IoU comparison needs boxes on both detections")
        return iou(a.box, b.box)
    if a.world is None or b.world is None:
        raise ValidationError("ground-plane comparison needs world points on both detections")
    return distance(a.world, b.world)


def is_hit_quality(overlap: Overlap, quality):
    if overlap.mode == IOU:
        return quality >= overlap.delta
    return quality <= overlap.delta


def is_miss(det_t: Detection | None, det_c: Detection | None, overlap: Overlap) -> bool:
    if det_t is None and det_c is None:
        raise ValidationError("miss predicate is undefined for two absent detections")
    if det_t is None or det_c is None:
        return True
    return not is_hit_quality(overlap, overlap_quality(overlap, det_t, det_c))


class PairCost(NamedTuple):
    fn: int
    fp: int
    total: int


def pair_cost(truth_traj: Trajectory | None, comp_traj: Trajectory | None, overlap: Overlap) -> PairCost:
    """False-negative and false-positive frame counts of matching ``truth_traj`` to ``comp_traj``.

    ``None`` stands for the irregular partner: every detection on the other
    side is then a miss, and two irregular nodes cost nothing.
    """
    if truth_traj is None and comp_traj is None:
        return PairCost(0, 0, 0)
    if comp_traj is None:
        return PairCost(len(truth_traj), 0, len(truth_traj))
    if truth_traj is None:
        return PairCost(0, len(comp_traj), len(comp_traj))
    td, gd = truth_traj.detections, comp_traj.detections
    fn = sum(is_miss(det, gd.get(site), overlap) for site, det in td.items())
    fp = sum(is_miss(td.get(site), det, overlap) for site, det in gd.items())
    return PairCost(fn, fp, fn + fp)
