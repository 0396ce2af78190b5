import json
import math
import shutil
from importlib import resources

import pytest

from ilsim.cli import EXIT_CONFIG, load_run_config, main, parse_phase


@pytest.mark.parametrize("text,value", [
    ("0", 0.0), ("pi", math.pi), ("-pi", -math.pi), ("0.5pi", 0.5 * math.pi),
    ("pi/2", 0.5 * math.pi), ("-3*pi/4", -0.75 * math.pi), ("1.25", 1.25),
])
def test_parse_phase(text, value):
    assert parse_phase(text) == pytest.approx(value, rel=1e-15)


def _simulate(capsys, *args):
    assert main(["simulate", *args]) == 0
    return json.loads(capsys.readouterr().out)


def test_simulate_resonant_and_antiresonant(capsys):
    res = _simulate(capsys, "--dphi", "0")
    anti = _simulate(capsys, "--dphi", "pi")
    assert res["eta"] == pytest.approx(1.000, rel=1e-3)
    assert anti["eta"] == pytest.approx(4.820, rel=1e-3)
    assert res["n"] > anti["n"] > 0
    assert res["Delta_rad_s"] == 0.0 and anti["Delta_rad_s"] == 0.0
    assert math.fsum(res["populations"].values()) == pytest.approx(1.0, abs=1e-12)
    assert res["config_hash"] == anti["config_hash"]


def test_simulate_detuning_flag(capsys):
    out = _simulate(capsys, "--detuning-mhz", "0")
    assert out["delta_phi_rad"] == 0.0


def test_malformed_config_exits_2(tmp_path, capsys):
    bad = tmp_path / "run.json"
    bad.write_text("{not json")
    assert main(["simulate", "--config", str(bad)]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err
    bad.write_text(json.dumps({"intensity": 3}))
    assert main(["simulate", "--config", str(bad)]) == EXIT_CONFIG
    bad.write_text(json.dumps({"atomic_config": "missing.json"}))
    assert main(["simulate", "--config", str(bad)]) == EXIT_CONFIG
    broken = tmp_path / "atoms.json"
    broken.write_text(json.dumps({"levels": 3}))
    bad.write_text(json.dumps({"atomic_config": "atoms.json"}))
    assert main(["simulate", "--config", str(bad)]) == EXIT_CONFIG
    assert main(["simulate", "--tol", "-1"]) == EXIT_CONFIG


def test_unknown_figure_and_bad_flag_exit_2(capsys):
    assert main(["figure", "fig9"]) == EXIT_CONFIG
    assert "fig2a" in capsys.readouterr().err
    assert main(["simulate", "--dphi", "banana"]) == EXIT_CONFIG


def test_figure_output_is_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["figure", "expfig3", "--no-plot", "--out", str(a)]) == 0
    assert main(["figure", "expfig3", "--no-plot", "--out", str(b)]) == 0
    capsys.readouterr()
    ma = (a / "expfig3.manifest.json").read_bytes()
    assert ma == (b / "expfig3.manifest.json").read_bytes()
    manifest = json.loads(ma)
    assert manifest["files"] and len(manifest["config_hash"]) == 64
    for f in manifest["files"]:
        assert (a / f["file"]).read_bytes() == (b / f["file"]).read_bytes()


def test_figure_jsonl_and_png(tmp_path, capsys):
    assert main(["figure", "expfig3", "--format", "jsonl", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    assert (tmp_path / "expfig3.png").stat().st_size > 0
    assert list(tmp_path.glob("*.jsonl"))


def test_config_dir_from_environment(tmp_path, monkeypatch, capsys):
    data = resources.files("ilsim") / "data"
    for name in ("cs_default.json", "cavity_default.json"):
        shutil.copy(str(data / name), tmp_path / name)
    cav = json.loads((tmp_path / "cavity_default.json").read_text())
    monkeypatch.setenv("ILSIM_CONFIG_DIR", str(tmp_path))
    rc = load_run_config()
    assert rc.cavity_path == str(tmp_path / "cavity_default.json")
    default_hash = _simulate(capsys, "--dphi", "pi")["config_hash"]
    cav["R1"] = cav["R2"] = 0.5
    (tmp_path / "cavity_default.json").write_text(json.dumps(cav))
    changed = _simulate(capsys, "--dphi", "pi")
    assert changed["config_hash"] != default_hash
    monkeypatch.setenv("ILSIM_CONFIG_DIR", str(tmp_path / "nope"))
    assert main(["simulate"]) == EXIT_CONFIG
