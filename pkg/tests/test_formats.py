import json

import numpy as np
import pytest

from photonxfer import formats
from photonxfer.formats import FormatError
from photonxfer.pulses import separable_transfer_plan
from photonxfer.simulate import propagate
from photonxfer.zeros import transmission_zeros


def test_system_roundtrip(tmp_path, random_systems):
    for k, sys in enumerate(random_systems[:5]):
        path = tmp_path / f"s{k}.json"
        formats.save_system(sys, path)
        back = formats.load_system(path)
        assert back == sys


def test_dumps_is_deterministic_and_parseable(identical_pair):
    payload = formats.zero_report(transmission_zeros(identical_pair))
    a = formats.dumps(payload)
    b = formats.dumps(payload)
    assert a == b
    doc = json.loads(a)
    assert doc[0]["z"] == [0.5, 0.0]


def test_float_rendering_is_exact():
    x = 0.1 + 0.2
    text = formats.dumps({"x": x, "c": 1 / 3 + 2j})
    doc = json.loads(text)
    assert doc["x"] == x
    assert doc["c"] == [1 / 3, 2.0]
    assert formats.dumps(float("nan")).strip() == "null"


def test_to_jsonable_rejects_unknown():
    with pytest.raises(TypeError):
        formats.to_jsonable(object())


def test_write_atomic_leaves_no_temp(tmp_path):
    target = tmp_path / "sub" / "out.json"
    formats.write_atomic(target, "{}\n")
    formats.write_atomic(target, "[]\n")
    assert target.read_text() == "[]\n"
    assert [p.name for p in target.parent.iterdir()] == ["out.json"]


@pytest.mark.parametrize(
    "doc,field",
    [
        ({"schema": "other"}, "schema"),
        ({"schema": formats.SYSTEM_SCHEMA, "n": -1, "m": 1}, "'n'"),
        ({"schema": formats.SYSTEM_SCHEMA, "n": 1, "m": 1, "omega": [[0]], "coupling": [[1]]}, "scattering"),
        ({"schema": formats.SYSTEM_SCHEMA, "n": 1, "m": 1, "omega": [[0]], "coupling": [[1, 2]], "scattering": [[1]]}, "coupling[0]"),
        ({"schema": formats.SYSTEM_SCHEMA, "n": 1, "m": 1, "omega": [["x"]], "coupling": [[1]], "scattering": [[1]]}, "omega[0][0]"),
    ],
)
def test_system_errors_name_the_field(doc, field):
    with pytest.raises(FormatError, match=field.replace("[", r"\[").replace("]", r"\]")):
        formats.system_from_dict(doc)


def test_malformed_json_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"schema": \n  oops}')
    with pytest.raises(FormatError, match="line 2 column"):
        formats.load_json(path)


def test_missing_file(tmp_path):
    with pytest.raises(FormatError, match="cannot read"):
        formats.load_json(tmp_path / "nope.json")


def test_plan_and_csv(identical_pair):
    plan, _ = separable_transfer_plan(identical_pair)
    d = json.loads(formats.dumps(formats.plan_to_dict(plan)))
    assert d["schema"] == formats.PLAN_SCHEMA
    assert d["construction"] == "separable-blocking"
    assert d["truncation_window"][1] == 0.0
    times, amps = plan.sample(5)
    lines = formats.samples_csv(times, amps).splitlines()
    assert lines[0] == "t,ch1_re,ch1_im,ch2_re,ch2_im"
    assert len(lines) == 6
    traj = propagate(identical_pair, plan.normalized(), dt=0.1)
    lines = formats.trajectory_csv(traj).splitlines()
    assert lines[0].split(",")[:3] == ["t", "psi1_re", "psi1_im"]
    assert len(lines) == len(traj.times) + 1


def test_scenario_config():
    name, params = formats.scenario_config_from_dict({"name": "example2", "parameters": {"C1": [1, 0], "x": [1, [0, 1]], "alpha": 0.6}})
    assert name == "example2"
    assert params["x"] == [1, 1j]
    with pytest.raises(FormatError):
        formats.scenario_config_from_dict({"parameters": {}})
    with pytest.raises(FormatError, match="alpha"):
        formats.scenario_config_from_dict({"name": "example2", "parameters": {"alpha": [0.6, 0.1]}})
