"""Detection CSV, homography directories and mapping files.

Detection rows have exactly nine comma-separated fields::

    camera,frame,id,bb_left,bb_top,bb_width,bb_height,world_x,world_y

A box with width or height -1 is absent; a world point with either
coordinate -1e9 is absent. An optional header line is recognized by a
non-numeric first token.
"""

from __future__ import annotations

import csv
import io
import math
import re
from pathlib import Path
from typing import IO

import numpy as np
import pandas as pd

from .errors import ParseError, ValidationError
from .geometry import Homography
from .idmeasures import TruthToResultMatch
from .model import Camera, DetectionTable

FIELDS = ("camera", "frame", "id", "bb_left", "bb_top", "bb_width", "bb_height", "world_x", "world_y")
HEADER = ",".join(FIELDS)
NO_BOX = -1.0
NO_WORLD = -1e9
MAPPING_HEADER = "truth,computed,fn,fp"

_INT = re.compile(r"^\s*[+-]?\d+\s*$")
_HOMOGRAPHY_FILE = re.compile(r"^camera(\d+)\.txt$")


def _read_text(source) -> str:
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8", newline="") as fh:
            return fh.read()
    text = source.read()
    return text.decode("utf-8") if isinstance(text, bytes) else text


def _is_header(line: str) -> bool:
    first = line.split(",", 1)[0].strip().strip('"')
    try:
        float(first)
    except ValueError:
        return True
    return False


def _columns_to_table(camera, frame, ident, nums: np.ndarray) -> DetectionTable:
    box = nums[:, 0:4].copy()
    world = nums[:, 4:6].copy()
    box[(box[:, 2] == NO_BOX) | (box[:, 3] == NO_BOX)] = np.nan
    world[(world == NO_WORLD).any(axis=1)] = np.nan
    return DetectionTable.from_columns(camera, frame, ident, box, world)


def _parse_slow(lines: list[str], first_line: int) -> DetectionTable:
    """Line-by-line parser; pinpoints the first malformed field."""
    camera, frame, ident, nums = [], [], [], []
    for offset, raw in enumerate(lines):
        lineno = first_line + offset
        if not raw.strip():
            continue
        fields = next(csv.reader([raw]))
        if len(fields) != len(FIELDS):
            raise ParseError(f"expected {len(FIELDS)} fields, found {len(fields)}", lineno)
        for col in (0, 1):
            if not _INT.match(fields[col]):
                raise ParseError(f"{FIELDS[col]} must be an integer, got {fields[col]!r}", lineno, col + 1)
        label = fields[2].strip()
        if not label:
            raise ParseError("empty identity", lineno, 3)
        values = []
        for col in range(3, 9):
            try:
                v = float(fields[col])
            except ValueError:
                raise ParseError(f"{FIELDS[col]} must be a number, got {fields[col]!r}", lineno, col + 1) from None
            if not math.isfinite(v):
                raise ParseError(f"{FIELDS[col]} must be finite, got {fields[col]!r}", lineno, col + 1)
            values.append(v)
        camera.append(int(fields[0]))
        frame.append(int(fields[1]))
        ident.append(label)
        nums.append(values)
    if not ident:
        return DetectionTable.empty()
    return _columns_to_table(camera, frame, ident, np.asarray(nums, dtype=float))


def _parse_fast(body: str, n_lines: int) -> DetectionTable | None:
    """Bulk parse with pandas; None when anything looks off (the slow path
    then finds the exact error)."""
    if body.count(",") != (len(FIELDS) - 1) * n_lines or '"' in body:
        return None
    try:
        df = pd.read_csv(
            io.StringIO(body),
            header=None,
            names=list(FIELDS),
            dtype={"camera": np.int64, "frame": np.int64, "id": str},
            na_filter=False,
            engine="c",
            float_precision="round_trip",
        )
    except (ValueError, pd.errors.ParserError):
        return None
    if len(df) != n_lines:
        return None
    nums = df.iloc[:, 3:].to_numpy()
    if nums.dtype.kind != "f" or not np.isfinite(nums).all():
        return None
    ident = df["id"].str.strip()
    if (ident == "").any():
        return None
    return _columns_to_table(df["camera"].to_numpy(), df["frame"].to_numpy(), ident.to_numpy(), nums)


def parse_detections(source: str | Path | IO) -> DetectionTable:
    """Read a detection CSV from a path or an open text/binary stream.

    An empty input yields an empty table. Malformed lines raise
    :class:`ParseError` carrying the 1-based line (and column when known).
    """
    text = _read_text(source)
    lines = text.splitlines()
    start = 0
    while start < len(lines) and not lines[start].strip():
        start += 1
    if start == len(lines):
        return DetectionTable.empty()
    if _is_header(lines[start]):
        start += 1
    data = [ln for ln in lines[start:] if ln.strip()]
    if not data:
        return DetectionTable.empty()
    table = _parse_fast("\n".join(data), len(data))
    if table is None:
        table = _parse_slow(lines[start:], start + 1)
    return table


def detection_columns(table: DetectionTable) -> list[list]:
    """The nine output columns as Python lists, sentinels filled in."""
    box = table.box.copy()
    box[np.isnan(box).any(axis=1)] = NO_BOX
    world = table.world.copy()
    world[np.isnan(world).any(axis=1)] = NO_WORLD
    cols = [table.camera.tolist(), table.frame.tolist(), table.identities.tolist()]
    for v in (*box.T, *world.T):
        # integral columns print without a trailing ".0"
        integral = v.size and np.all(v == np.round(v)) and np.abs(v).max() < 2**53
        cols.append(v.astype(np.int64).tolist() if integral else v.tolist())
    return cols


def write_detections(table: DetectionTable, target: str | Path | IO, header: bool = True) -> None:
    """Write rows in the detection CSV format. Floats use the shortest text
    that reads back to the same double, so parsing the output is lossless."""
    if isinstance(target, (str, Path)):
        with open(target, "w", encoding="utf-8", newline="") as fh:
            write_detections(table, fh, header)
        return
    writer = csv.writer(target, lineterminator="\n")
    if header:
        writer.writerow(FIELDS)
    writer.writerows(zip(*detection_columns(table)))


def load_homographies(directory: str | Path) -> dict[int, Camera]:
    """Cameras keyed by id from ``camera<k>.txt`` files (9 numbers, row-major)."""
    path = Path(directory)
    if not path.is_dir():
        raise ValidationError(f"homography directory {str(path)!r} does not exist")
    cams = {}
    for f in sorted(path.iterdir()):
        m = _HOMOGRAPHY_FILE.match(f.name)
        if m:
            cams[int(m.group(1))] = Camera(Homography.from_file(f))
    if not cams:
        raise ValidationError(f"no camera<k>.txt files in {str(path)!r}")
    return cams


def write_homographies(cameras: dict[int, Camera], directory: str | Path) -> None:
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    for k, cam in cameras.items():
        if cam.homography is not None:
            (path / f"camera{k}.txt").write_text(cam.homography.to_text(), encoding="utf-8")


def write_mapping(match: TruthToResultMatch, target: str | Path) -> None:
    """Truth-to-result pairs as ``truth,computed,fn,fp`` lines."""
    with open(target, "w", encoding="utf-8", newline="") as fh:
        fh.write(MAPPING_HEADER + "\n")
        for line in match.mapping_lines():
            fh.write(line + "\n")
