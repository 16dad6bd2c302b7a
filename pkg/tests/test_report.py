import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from mtmceval import __version__
from mtmceval.errors import ValidationError
from mtmceval.model import build_scenario
from mtmceval.report import SCHEMA, build_report, dumps, format_text, loads, write_report
from mtmceval.synth import RandomParams, make_figure1, make_figure2, random_scenario


def perfect(s):
    return build_scenario(s.truth, s.truth, s.cameras, s.overlap)


def test_figure1a_idf1_text():
    text = dumps(build_report(make_figure1("a"), ["id"]))
    assert '"idf1": 0.6667' in text
    doc = json.loads(text)
    assert doc["clear"] is None and doc["mcta"] is None
    assert doc["mapping"] == [
        {"truth": "A", "computed": "1", "fn": 30, "fp": 0},
        {"truth": None, "computed": "2", "fn": 0, "fp": 30},
    ]


def test_perfect_report():
    text = dumps(build_report(perfect(make_figure2("a")), per_camera=True, diagnostics=True))
    assert '"mota": 1.0000' in text and '"idf1": 1.0000' in text
    doc = loads(text)
    assert doc["handover"]["histogram"]["clean"] == 1


def test_header_fields():
    doc = build_report(make_figure1("b"))
    assert doc["schema"] == SCHEMA and doc["tool"] == {"name": "mtmceval", "version": __version__}
    assert doc["scenario"] == {
        "truth_rows": 90, "computed_rows": 90, "truth_identities": 1, "computed_identities": 2,
        "cameras": [1], "mode": "iou", "delta": 0.5,
    }
    assert doc["clear"]["ids"] == 7 and isinstance(doc["clear"]["tp"], int)


def test_unknown_options():
    with pytest.raises(ValidationError):
        build_report(make_figure1("a"), ["id", "hota"])
    with pytest.raises(ValidationError):
        build_report(make_figure1("a"), mota_mismatches="x")


def test_canonical_serialization():
    doc = build_report(make_figure2("b"), per_camera=True, diagnostics=True)
    text = dumps(doc)
    assert dumps(loads(text)) == text
    assert text.endswith("\n")
    assert dumps({"a": -0.0, "b": math.nan, "c": [1, 2.5], "d": {}}) == (
        '{\n  "a": 0.0000,\n  "b": null,\n  "c": [\n    1,\n    2.5000\n  ],\n  "d": {}\n}\n'
    )


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=15, deadline=None)
def test_serialization_stable_random(seed):
    p = RandomParams(cameras=3, identities=6, frames=60, fragment_rate=0.3, flip_rate=0.2, spurious_rate=0.5)
    doc = build_report(random_scenario(p, seed).corrupted, per_camera=True, diagnostics=True)
    text = dumps(doc)
    assert dumps(loads(text)) == text
    assert dumps(build_report(random_scenario(p, seed).corrupted, per_camera=True, diagnostics=True)) == text


def test_eight_camera_table():
    s = random_scenario(RandomParams(cameras=8, identities=15, frames=80, fragment_rate=0.3), 2).corrupted
    doc = build_report(s, per_camera=True)
    assert [r["camera"] for r in doc["per_camera"]] == [1, 2, 3, 4, 5, 6, 7, 8, "all"]
    lines = format_text(doc).splitlines()
    assert lines[0].split()[:2] == ["Cam", "FP"]
    assert sum(1 for ln in lines if ln.split() and (ln.split()[0].isdigit() or ln.split()[0] == "all")) == 9


def test_write_report(tmp_path):
    doc = build_report(make_figure1("a"))
    write_report(doc, tmp_path / "r.json", tmp_path / "r.txt")
    assert (tmp_path / "r.json").read_text() == dumps(doc)
    assert "IDF1" in (tmp_path / "r.txt").read_text()
    with pytest.raises(OSError):
        write_report(doc, tmp_path / "missing" / "r.json")
