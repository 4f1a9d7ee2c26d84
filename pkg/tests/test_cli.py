import json
import subprocess
import sys

import numpy as np
import pytest

from photonxfer import formats
from photonxfer.cli import main, parse_coeffs

from conftest import ring, two_cavities


@pytest.fixture
def pair_file(tmp_path):
    path = tmp_path / "pair.json"
    formats.save_system(two_cavities(), path)
    return path


@pytest.fixture
def ring_file(tmp_path):
    path = tmp_path / "ring.json"
    formats.save_system(ring(1.0, 2.0), path)
    return path


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate_ring(ring_file, capsys):
    code, out, _ = run(["validate", "--system", ring_file], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["passed"] is True
    # single mode with A = -(γ1+γ2)/2
    assert doc["hurwitz_margin_found"] == pytest.approx(1.5, abs=1e-12)


def test_validate_invalid_system_fails(tmp_path, capsys):
    path = tmp_path / "bad.json"
    doc = formats.to_jsonable(formats.system_to_dict(two_cavities()))
    doc["scattering"] = [[[1, 0], [1, 0]], [[0, 0], [1, 0]]]
    path.write_text(json.dumps(doc))
    code, out, _ = run(["validate", "--system", path], capsys)
    assert code == 1
    assert json.loads(out)["passed"] is False


def test_zeros_reports_blocking(pair_file, capsys):
    code, out, _ = run(["zeros", "--system", pair_file], capsys)
    assert code == 0
    recs = json.loads(out)
    assert len(recs) == 2
    assert all(r["is_blocking"] for r in recs)


def test_pulse_writes_outputs(pair_file, tmp_path, capsys):
    out = tmp_path / "plan.json"
    csv = tmp_path / "s.csv"
    code, _, _ = run(["pulse", "--system", pair_file, "--out", out, "--samples-csv", csv, "--samples", 11], capsys)
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["normalized"]["l2_norm"] == pytest.approx(1.0, abs=1e-9)
    assert len(csv.read_text().splitlines()) == 12


def test_pulse_without_separable_input(ring_file, capsys, caplog):
    code, out, _ = run(["pulse", "--system", ring_file], capsys)
    assert code == 1
    doc = json.loads(out)
    assert doc["plan"] is None
    assert "entangled" in doc["justification"]
    assert any("entangled" in r.message for r in caplog.records)


def test_simulate_xi_route(ring_file, tmp_path, capsys):
    traj = tmp_path / "traj.csv"
    code, out, _ = run(
        ["simulate", "--system", ring_file, "--construction", "xi-row-combination", "--coeffs", "1", "--dump-trajectory", traj],
        capsys,
    )
    assert code == 0
    rep = json.loads(out)["report"]
    assert rep["verdict"] == "pass"
    assert traj.read_text().startswith("t,psi1_re")


def test_simulate_zero_mode_on_pair(pair_file, capsys):
    code, out, _ = run(["simulate", "--system", pair_file, "--construction", "zero-mode", "--coeffs", "0.6;0,0.8"], capsys)
    assert code == 0
    assert json.loads(out)["report"]["fidelity"] >= 1 - 1e-5


def test_simulate_dt_too_large(pair_file, capsys):
    code, _, err = run(["simulate", "--system", pair_file, "--dt", "5"], capsys)
    assert code == 2
    assert "dt_max" in err


def test_demo_examples(capsys):
    for name in ("example1", "example2", "example3", "example4"):
        code, out, _ = run(["demo", name, "--simulate"], capsys)
        assert code == 0, name
        assert json.loads(out)["passed"] is True


def test_demo_config_and_overrides(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"name": "example4", "parameters": {"gamma1": 1.0, "gamma2": 1.0}}))
    s = 1 / np.sqrt(2)
    code, out, _ = run(["demo", "example4", "--config", cfg, "--alpha", s, "--beta", s, "--simulate"], capsys)
    assert code == 0
    assert json.loads(out)["plan"]["construction"] == "separable-basis"


def test_malformed_config_exit_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    code, _, err = run(["demo", "example3", "--config", cfg], capsys)
    assert code == 2
    assert "line 1" in err


def test_bad_constraint_exit_2(capsys):
    code, _, err = run(["demo", "example3", "--alpha", "0.5", "--beta", "0.5"], capsys)
    assert code == 2
    assert "α²+β²=1" in err


def test_usage_errors_exit_2(pair_file, capsys):
    assert run(["zeros"], capsys)[0] == 2
    assert run(["bogus"], capsys)[0] == 2
    assert run(["simulate", "--system", pair_file, "--coeffs", "1"], capsys)[0] == 2
    assert run(["simulate", "--system", pair_file, "--construction", "zero-mode", "--coeffs", "a,b"], capsys)[0] == 2
    assert run(["simulate", "--system", pair_file, "--construction", "zero-mode", "--coeffs", "1;1;1"], capsys)[0] == 2
    assert run(["pulse", "--system", pair_file, "--channel", "0"], capsys)[0] == 2
    assert run(["zeros", "--system", pair_file.parent / "missing.json"], capsys)[0] == 2


def test_outputs_are_byte_identical(pair_file, tmp_path, capsys):
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.json"
        assert run(["simulate", "--system", pair_file, "--out", path], capsys)[0] == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_demo_all_parallel_matches_serial(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["demo", "all", "--out", a], capsys)[0] == 0
    assert run(["demo", "all", "--workers", "2", "--out", b], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_parse_coeffs():
    assert np.allclose(parse_coeffs("1;0,2; -1.5,0.5"), [1, 2j, -1.5 + 0.5j])


def test_module_entry_point(pair_file):
    proc = subprocess.run([sys.executable, "-m", "photonxfer", "zeros", "--system", str(pair_file)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)[0]["is_blocking"] is True
