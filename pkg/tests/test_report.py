import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from roughnet import report as rep
from roughnet.errors import Mismatch


def test_canonical_rounding_and_nonfinite():
    out = rep.canonical({"x": 0.1 + 0.2, "n": np.float64("nan"), "i": np.inf, "k": np.int64(3), "b": np.bool_(True)})
    assert out == {"x": 0.3, "n": "nan", "i": "inf", "k": 3, "b": True}


def test_dumps_sorted_and_stable():
    a = rep.dumps({"b": 1, "a": [1.0, 2.0]})
    b = rep.dumps({"a": [1.0, 2.0], "b": 1})
    assert a == b and a.index('"a"') < a.index('"b"')


def test_canonical_rejects_objects():
    with pytest.raises(TypeError):
        rep.canonical(object())


def test_first_difference():
    assert rep.first_difference({"a": [1, 2]}, {"a": [1, 2]}) is None
    assert rep.first_difference({"a": [1, 2]}, {"a": [1, 3]}) == "$.a[1]"
    assert rep.first_difference({"a": 1}, {"a": 1, "b": 2}) == "$.b"
    assert rep.first_difference([1], [1, 2]) == "$[1]"


def test_compare_reports():
    t = rep.dumps({"x": {"y": 1}})
    assert rep.compare_reports(t, t)
    with pytest.raises(Mismatch) as exc:
        rep.compare_reports(t, rep.dumps({"x": {"y": 2}}))
    assert exc.value.path == "$.x.y"


def test_csv_and_histogram(tmp_path):
    p = tmp_path / "a.csv"
    rep.write_csv(p, ["i", "v"], [(0, 0.5), (1, 1 / 3)])
    lines = p.read_text().splitlines()
    assert lines[0] == "i,v" and lines[2] == "1,0.333333333333"
    h = rep.pair_histogram([(1, 2), (1, 2), (3, 1)])
    assert h.tolist() == [[1, 2, 2], [3, 1, 1]]


@pytest.mark.parametrize("svg", [
    rep.svg_scatter(np.random.default_rng(0).uniform(size=(20, 2)), "t <&>", highlight=(0.5, 0.5)),
    rep.svg_histogram([1e-9] * 5),
    rep.svg_histogram([1.0, 1.0 + 1e-13, 1.0 - 1e-13]),
    rep.svg_histogram(np.arange(10.0)),
    rep.svg_band([(1, 1), (2, 3)], 2.0, 0.5),
    rep.svg_scatter(np.zeros((0, 2))),
])
def test_svg_well_formed(svg):
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")


def test_write_json_roundtrip(tmp_path):
    text = rep.write_json(tmp_path / "r.json", {"v": 1.23456789012345})
    assert json.loads(text) == {"v": 1.23456789012}
