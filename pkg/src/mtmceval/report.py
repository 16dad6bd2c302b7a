"""Report assembly and canonical serialization.

JSON layout (stable; keys always present, ``null`` when not requested)::

    {
      "schema": "mtmceval.report/1",
      "tool": {"name": "mtmceval", "version": str},
      "scenario": {"truth_rows", "computed_rows", "truth_identities",
                   "computed_identities", "cameras": [int], "mode", "delta"},
      "options": {"measures": [str], "mota_mismatches": "phi"|"mu",
                  "per_camera": bool, "diagnostics": bool},
      "id": {"idp", "idr", "idf1", "idtp", "idfp", "idfn"},
      "clear": {"tp", "fp", "fn", "ids", "frag_within", "frag_handover",
                "merge_within", "merge_handover", "frg", "gt", "mt", "ml", "mota", "motp",
                "precision", "recall"},
      "mcta": {"mcta", "f1", "within", "handover", "t_within", "t_handover",
               "mismatches_within", "mismatches_handover"},
      "per_camera": [{"camera": int|"all", "t", "fp", "fn", "ids", "frg", "mota",
                      "motp", "gt", "mt", "ml", "idp", "idr", "idf1"}],
      "handover": {"difficulty": {...}, "histogram": {...}, "cases": [...]},
      "mapping": [{"truth", "computed", "fn", "fp"}]
    }

Scores are written with exactly four decimals, counts as integers and
undefined values as ``null``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

from . import __version__
from .diagnostics import CameraRow, classify_handovers, handover_difficulty, per_camera_report
from .errors import ValidationError
from .events import EventAnalysis, EventScores, evaluate_events
from .idmeasures import IdScores, TruthToResultMatch, id_scores, match_truth_to_result
from .model import Scenario

SCHEMA = "mtmceval.report/1"
MEASURES = ("id", "clear", "mcta")


def _score(v: float | None) -> float | None:
    if v is None or not math.isfinite(v):
        return None
    return float(v)


def id_block(s: IdScores) -> dict:
    return {
        "idp": _score(s.idp), "idr": _score(s.idr), "idf1": _score(s.idf1),
        "idtp": s.idtp, "idfp": s.idfp, "idfn": s.idfn,
    }


def clear_block(e: EventScores) -> dict:
    return {
        "tp": e.tp, "fp": e.fp, "fn": e.fn, "ids": e.frags,
        "frag_within": e.frag_within, "frag_handover": e.frag_handover,
        "merge_within": e.merge_within, "merge_handover": e.merge_handover,
        "frg": e.frg, "gt": e.gt, "mt": e.mt, "ml": e.ml,
        "mota": _score(e.mota), "motp": _score(e.motp),
        "precision": _score(e.precision), "recall": _score(e.recall),
    }


def mcta_block(e: EventScores) -> dict:
    m = e.mcta
    return {
        "mcta": _score(m.mcta), "f1": _score(m.f1), "within": _score(m.within), "handover": _score(m.handover),
        "t_within": m.t_within, "t_handover": m.t_handover,
        "mismatches_within": e.frag_within + e.merge_within, "mismatches_handover": e.frag_handover + e.merge_handover,
    }


def camera_block(row: CameraRow) -> dict:
    e, s = row.events, row.id
    return {
        "camera": "all" if row.camera is None else row.camera,
        "t": e.tp + e.fn,
        "fp": e.fp, "fn": e.fn, "ids": e.frags, "frg": e.frg,
        "mota": _score(e.mota), "motp": _score(e.motp),
        "gt": e.gt, "mt": e.mt, "ml": e.ml,
        "idp": _score(s.idp), "idr": _score(s.idr), "idf1": _score(s.idf1),
    }


def build_report(
    scenario: Scenario,
    measures=MEASURES,
    per_camera: bool = False,
    diagnostics: bool = False,
    mota_mismatches: str = "phi",
) -> dict:
    """Evaluate ``scenario`` and assemble the report document."""
    unknown = set(measures) - set(MEASURES)
    measures = tuple(m for m in MEASURES if m in set(measures))
    if unknown:
        raise ValidationError(f"unknown measures {sorted(unknown)}")
    if mota_mismatches not in ("phi", "mu"):
        raise ValidationError(f"unknown mismatch count {mota_mismatches!r}; expected 'phi' or 'mu'")

    need_id = "id" in measures or per_camera or diagnostics
    need_events = "clear" in measures or "mcta" in measures or per_camera or diagnostics
    match: TruthToResultMatch | None = match_truth_to_result(scenario) if need_id else None
    events: EventAnalysis | None = evaluate_events(scenario, mota_mismatches) if need_events else None

    doc: dict[str, Any] = {
        "schema": SCHEMA,
        "tool": {"name": "mtmceval", "version": __version__},
        "scenario": {
            "truth_rows": len(scenario.truth),
            "computed_rows": len(scenario.computed),
            "truth_identities": len(scenario.truth.labels),
            "computed_identities": len(scenario.computed.labels),
            "cameras": sorted(scenario.cameras),
            "mode": scenario.overlap.mode,
            "delta": float(scenario.overlap.delta),
        },
        "options": {
            "measures": list(measures),
            "mota_mismatches": mota_mismatches,
            "per_camera": per_camera,
            "diagnostics": diagnostics,
        },
        "id": id_block(id_scores(match)) if "id" in measures else None,
        "clear": clear_block(events.scores) if "clear" in measures else None,
        "mcta": mcta_block(events.scores) if "mcta" in measures else None,
        "per_camera": None,
        "handover": None,
        "mapping": None,
    }
    rows = None
    if per_camera or diagnostics:
        rows = per_camera_report(scenario, mota_mismatches, CameraRow(None, id_scores(match), events.scores, match))
    if per_camera:
        doc["per_camera"] = [camera_block(r) for r in rows]
    if diagnostics:
        singles = {r.camera: r.match for r in rows if r.camera is not None}
        hd = handover_difficulty(scenario, match, singles)
        hr = classify_handovers(scenario, match, events)
        doc["handover"] = {
            "difficulty": {
                "multi_errors": hd.multi_errors, "single_errors": hd.single_errors, "difference": hd.difference,
                "idp_delta": _score(hd.idp_delta), "idr_delta": _score(hd.idr_delta),
                "idf1_delta": _score(hd.f1_delta), "note": hd.note,
            },
            "histogram": dict(hr.histogram),
            "cases": [
                {
                    "truth": c.truth, "from_camera": c.cameras[0], "to_camera": c.cameras[1],
                    "from_frame": c.frames[0], "to_frame": c.frames[1],
                    "classification": c.classification, "fragment_length": c.fragment_length,
                }
                for c in hr.cases
            ],
        }
    if "id" in measures:
        doc["mapping"] = [
            {"truth": p.truth, "computed": p.computed, "fn": p.fn, "fp": p.fp} for p in match.pairs
        ]
    return doc


# -- canonical JSON ------------------------------------------------------------


def _dump(v, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    if v is None or isinstance(v, bool):
        out.append(json.dumps(v))
    elif isinstance(v, int):
        out.append(str(v))
    elif isinstance(v, float):
        if not math.isfinite(v):
            out.append("null")
        else:
            text = f"{v:.4f}"
            out.append("0.0000" if text == "-0.0000" else text)
    elif isinstance(v, str):
        out.append(json.dumps(v, ensure_ascii=False))
    elif isinstance(v, dict):
        if not v:
            out.append("{}")
            return
        out.append("{\n")
        for k, (key, item) in enumerate(v.items()):
            out.append(f"{pad}  {json.dumps(str(key), ensure_ascii=False)}: ")
            _dump(item, indent + 1, out)
            out.append(",\n" if k < len(v) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(v, (list, tuple)):
        if not v:
            out.append("[]")
            return
        out.append("[\n")
        for k, item in enumerate(v):
            out.append(pad + "  ")
            _dump(item, indent + 1, out)
            out.append(",\n" if k < len(v) - 1 else "\n")
        out.append(pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(v).__name__}")


def dumps(doc) -> str:
    """Canonical text: 2-space indent, insertion-ordered keys, 4-decimal floats."""
    out: list[str] = []
    _dump(doc, 0, out)
    out.append("\n")
    return "".join(out)


def loads(text: str):
    return json.loads(text)


# -- text table ------------------------------------------------------------------

_COLUMNS = ("Cam", "FP", "FN", "IDS", "FRG", "MOTA", "MOTP", "GT", "MT", "ML", "|", "IDP", "IDR", "IDF1")


def _pct(v) -> str:
    return "-" if v is None else f"{100.0 * v:.2f}"


def _text_rows(doc: dict) -> list[list[str]]:
    if doc["per_camera"]:
        blocks = doc["per_camera"]
    else:
        c, i = doc["clear"] or {}, doc["id"] or {}
        blocks = [{"camera": "all", "t": doc["scenario"]["truth_rows"], **{k: c.get(k) for k in ("fp", "fn", "ids", "frg", "mota", "motp", "gt", "mt", "ml")},
                   **{k: i.get(k) for k in ("idp", "idr", "idf1")}}]
    rows = []
    for b in blocks:
        t = b["t"]
        # FP and FN as percentages of true detections
        fp = None if b["fp"] is None or not t else b["fp"] / t
        fn = None if b["fn"] is None or not t else b["fn"] / t
        rows.append([
            str(b["camera"]),
            _pct(fp), _pct(fn),
            "-" if b["ids"] is None else str(b["ids"]),
            "-" if b["frg"] is None else str(b["frg"]),
            _pct(b["mota"]), _pct(b["motp"]),
            *("-" if b[k] is None else str(b[k]) for k in ("gt", "mt", "ml")),
            "|",
            _pct(b["idp"]), _pct(b["idr"]), _pct(b["idf1"]),
        ])
    return rows


def format_text(doc: dict) -> str:
    """Plain-text table with the CLEAR family left and identity measures right."""
    rows = [list(_COLUMNS)] + _text_rows(doc)
    widths = [max(len(r[k]) for r in rows) for k in range(len(_COLUMNS))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
    extra = []
    if doc["mcta"]:
        m = doc["mcta"]
        extra.append(f"MCTA {_pct(m['mcta'])}  (F1 {_pct(m['f1'])}, within {_pct(m['within'])}, handover {_pct(m['handover'])})")
    if doc["handover"]:
        d = doc["handover"]["difficulty"]
        extra.append(f"handover difficulty: {d['multi_errors']} joint - {d['single_errors']} per-camera identity errors = {d['difference']}")
        hist = ", ".join(f"{k}: {v}" for k, v in doc["handover"]["histogram"].items())
        extra.append(f"handovers: {hist}")
    return "\n".join(lines + extra) + "\n"


def write_report(doc: dict, json_path: str | Path | None = None, text_path: str | Path | None = None) -> None:
    if json_path is not None:
        Path(json_path).write_text(dumps(doc), encoding="utf-8")
    if text_path is not None:
        Path(text_path).write_text(format_text(doc), encoding="utf-8")
