"""Run bundles: CSV text, summaries, manifests and summary comparison."""

from __future__ import annotations

import json

import numpy as np
import pytest

from logquotient.errors import ConfigError
from logquotient.runs import (
    RunManifest,
    RunTimer,
    compare_summaries,
    format_value,
    jsonable,
    load_manifest,
    load_summary,
    make_sparkline,
    read_csv,
    save_manifest,
    save_summary,
    write_csv,
)


def test_format_value():
    assert format_value(0.1) == "0.1"
    assert format_value(np.float64(1.0) / 3.0) == repr(1.0 / 3.0)
    assert format_value(np.int64(7)) == "7"
    assert format_value("A") == "A"


def test_csv_keeps_shortest_float_text(tmp_path):
    path = tmp_path / "t.csv"
    rows = np.array([[0.0, 1.0 / 3.0], [0.1, 2.0 ** -40]])
    assert write_csv(path, ["t", "x_1"], rows) == 2
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "t,x_1"
    assert lines[1] == f"0.0,{1.0 / 3.0!r}"
    table = read_csv(path)
    assert table.columns == ["t", "x_1"]
    assert np.array_equal(table.data, rows)


def test_jsonable():
    data = jsonable({
        "z": np.array([1 + 2j]),
        "flag": np.bool_(True),
        "n": np.int32(3),
        "v": np.array([0.5, 1.5]),
        1: (np.float32(2.0),),
    })
    assert data == {"z": [{"real": 1.0, "imag": 2.0}], "flag": True, "n": 3, "v": [0.5, 1.5], "1": [2.0]}
    json.dumps(data)


def test_summary_roundtrip_and_missing(tmp_path):
    save_summary(tmp_path, {"Q_ss": np.float64(50.0), "ok": np.bool_(True)})
    assert load_summary(tmp_path) == {"Q_ss": 50.0, "ok": True}
    with pytest.raises(ConfigError):
        load_summary(tmp_path / "elsewhere")


def test_manifest_roundtrip(tmp_path):
    manifest = RunTimer().finish(RunManifest(command="eigen", files=["summary.json"]))
    assert manifest.timestamp
    assert manifest.memory_mb >= 0.0
    save_manifest(tmp_path, manifest)
    assert load_manifest(tmp_path) == manifest


def test_compare_summaries():
    stored = {"a": {"b": [1.0, 2.0]}, "name": "x", "flag": True}
    assert compare_summaries(stored, {"a": {"b": [1.0, 2.0 + 1e-12]}, "name": "x", "flag": True}) == []

    mismatches = compare_summaries(stored, {"a": {"b": [1.0, 2.1]}, "name": "y", "extra": 1})
    paths = {m.path for m in mismatches}
    assert paths == {"a.b[1]", "name", "flag", "extra"}


def test_compare_summaries_lengths_and_nan():
    assert compare_summaries([1.0], [1.0, 2.0])[0].path == "<root> (length)"
    assert compare_summaries({"x": float("nan")}, {"x": float("nan")}) == []
    assert compare_summaries({"x": None}, {"x": None}) == []


def test_make_sparkline():
    line = make_sparkline(np.linspace(0.0, 1.0, 200), width=20)
    assert len(line) == 20
    assert line[0] == " " and line[-1] == "█"
    assert make_sparkline([]) == ""
    assert set(make_sparkline([2.0, 2.0, 2.0])) == {" "}
