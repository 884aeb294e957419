import json

import numpy as np
import pytest

from regsyn.errors import ParseError
from regsyn.export import RunManifest, jsonable, load_controller, save_controller, write_json
from regsyn.synthesis import DiscreteController


def test_controller_round_trip_bitwise(design, tmp_path):
    ctrl, rep = design
    path = tmp_path / "c.json"
    save_controller(ctrl, path, rep, 2.0, "example")
    back, meta = load_controller(path)
    for key in ("P", "Q", "R"):
        np.testing.assert_array_equal(getattr(back, key), getattr(ctrl, key))
    np.testing.assert_array_equal(back.K[0, 0].num, ctrl.K[0, 0].num)
    np.testing.assert_array_equal(back.K[0, 0].den, ctrl.K[0, 0].den)
    assert meta["tau"] == 2.0 and meta["plant"] == "example"
    assert meta["report"]["status"] == "success"


def test_seventeen_digits(tmp_path):
    x = 0.1 + 0.2
    write_json({"x": x, "v": [1.0 / 3.0]}, tmp_path / "d.json")
    text = (tmp_path / "d.json").read_text()
    assert "0.30000000000000004" in text and "0.33333333333333331" in text
    assert json.loads(text)["x"] == x


def test_complex_controller_round_trip(tmp_path):
    ctrl = DiscreteController(P=np.array([[0.5j, 0.0], [1.0, -0.25]]), Q=[[1.0], [0.0]],
                              R=[[0.0, 1.0 - 2.0j]])
    save_controller(ctrl, tmp_path / "c.json")
    back, _ = load_controller(tmp_path / "c.json")
    np.testing.assert_array_equal(back.P, ctrl.P)
    np.testing.assert_array_equal(back.R, ctrl.R)


def test_load_errors(tmp_path):
    with pytest.raises(ParseError):
        load_controller(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    with pytest.raises(ParseError):
        load_controller(bad)
    bad.write_text('{"format": "regsyn-controller", "P": {"real": [[1]]}}')
    with pytest.raises(ParseError):
        load_controller(bad)


def test_jsonable():
    out = jsonable({"a": np.float64(1.5), "b": np.arange(2), "c": 1 + 2j, "d": np.inf,
                    "e": np.bool_(True), "f": (np.int64(3),)})
    assert out == {"a": 1.5, "b": [0, 1], "c": [1.0, 2.0], "d": "inf", "e": True, "f": [3]}


def test_manifest(tmp_path):
    m = RunManifest("simulate", ["example"], {"horizon": 10})
    m.artifacts.append("x.csv")
    m.finish("success")
    path = m.write(str(tmp_path))
    data = json.loads(open(path).read())
    assert path.endswith("manifest-simulate.json")
    assert data["status"] == "success" and data["wall_clock"] >= 0.0
    assert data["artifacts"] == ["x.csv"]
