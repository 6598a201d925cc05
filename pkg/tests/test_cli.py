import csv
import json
import math
import os
import subprocess
import sys

import pytest
import yaml

from tbands import __version__
from tbands.cli import main, parse_config, run, validate_config
from tbands.errors import ParseError, ValidationError

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")

M1 = {"chain": {"gamma": 1.0, "lengths": [0.5], "spacings": [0.5], "delta": 1e-3}}
D1 = {"chain": {"gamma": 3.0, "lengths": [0.25, 0.25], "spacings": [1.0, 2.0]}}
HN = {"hatano_nelson": {"v": 0.0, "gamma": 0.5}}


def _write_cfg(tmp_path, doc, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return str(path)


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


# configuration -------------------------------------------------------------

def test_minimal_chain_defaults():
    cfg = validate_config(M1)
    assert cfg.model_kind == "chain"
    assert cfg.grid["alpha_points"] == 512
    assert cfg.output["format"] == "csv"
    assert cfg.output["precision"] == 12
    assert cfg.spec().k == 1


def test_dimer_config():
    assert validate_config(D1).spec().k == 2


def test_empty_lengths_rejected():
    with pytest.raises(ValidationError):
        validate_config({"chain": {"gamma": 1.0, "lengths": [], "spacings": []}})


def test_all_problems_reported():
    with pytest.raises(ValidationError) as exc:
        validate_config({"chain": {"gamma": 0, "lengths": [0.5], "spacings": [-1.0]},
                         "grid": {"N": [1]}, "output": {"format": "xml"}, "extra": 1})
    text = " ".join(exc.value.problems)
    for key in ("chain.gamma", "spacings", "grid.N", "output.format", "extra"):
        assert key in text


def test_exactly_one_model():
    with pytest.raises(ValidationError):
        validate_config({**M1, **HN})
    with pytest.raises(ValidationError):
        validate_config({"grid": {}})


def test_defect_aliases():
    cfg = validate_config({**M1, "defect": {"eta": 1.5}})
    assert cfg.defect == {"kind": "multiplicative", "value": 1.5}
    cfg = validate_config({**HN, "defect": {"d": 2.0}})
    assert cfg.defect["kind"] == "additive" and cfg.defect["value"] == 2.0
    with pytest.raises(ValidationError):
        validate_config({**M1, "defect": {"eta": -1.5}})


def test_parse_error_reports_line(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("chain:\n  gamma: 1\n  lengths: [0.5\n")
    with pytest.raises(ParseError, match="line"):
        parse_config(str(path))


def test_parse_missing_file(tmp_path):
    with pytest.raises(ParseError):
        parse_config(str(tmp_path / "nope.yaml"))


@pytest.mark.parametrize("name", ["monomer.yaml", "dimer.yaml", "hatano_nelson.yaml"])
def test_shipped_configs_parse(name):
    parse_config(os.path.join(CONFIGS, name))


# commands ------------------------------------------------------------------

def test_bands_monomer(tmp_path):
    path = run("bands", validate_config(M1), str(tmp_path))
    header, rows = _read_csv(path)
    assert header == ["alpha", "branch", "beta", "lambda", "omega"]
    assert len(rows) == 512
    lam = [float(r[3]) for r in rows]
    assert min(lam) == pytest.approx(0.124353, abs=1e-6)
    assert max(lam) == pytest.approx(8.041624, abs=1e-6)
    meta = json.loads((tmp_path / "bands.meta.json").read_text())
    assert meta["version"] == __version__
    assert len(meta["config_hash"]) == 64
    assert "tolerances" in meta


def test_bands_dimer_with_gap_rows(tmp_path):
    cfg = validate_config({**D1, "grid": {"alpha_points": 64, "beta_tilde": {"max": 1.0, "points": 5}}})
    _, rows = _read_csv(run("bands", cfg, str(tmp_path)))
    assert sum(r[1] == "0" for r in rows) == 64
    assert sum(r[1] == "1" for r in rows) == 64
    assert any(r[1] == "gap" for r in rows)


def test_regions_command(tmp_path):
    _, rows = _read_csv(run("regions", validate_config(HN), str(tmp_path)))
    kinds = {r[0]: (float(r[1]), float(r[2])) for r in rows if r[0] != "det"}
    assert kinds["open"] == pytest.approx((-2.0, 2.0))
    assert kinds["wind"] == pytest.approx((-2.255252, 2.255252), abs=1e-6)


def test_spectrum_command(tmp_path):
    cfg = validate_config({**M1, "defect": {"eta": 1.5}, "grid": {"N": [50]}})
    header, rows = _read_csv(run("spectrum", cfg, str(tmp_path)))
    assert header == ["N", "index", "re", "im", "region"]
    assert len(rows) == 50
    assert sum(r[4] == "WindComplement" for r in rows) == 1


def test_defect_command(tmp_path):
    cfg = validate_config({**M1, "defect": {"eta": 1.5}, "grid": {"N": [200]}})
    header, rows = _read_csv(run("defect", cfg, str(tmp_path)))
    assert len(rows) == 1
    row = dict(zip(header, rows[0]))
    assert float(row["lambda"]) == pytest.approx(12.63568, abs=1e-5)
    assert float(row["closed_form_lambda"]) == pytest.approx(float(row["lambda"]), abs=1e-8)
    assert (tmp_path / "defect_mode_N200.csv").exists()


def test_green_command(tmp_path):
    cfg = validate_config({**D1, "grid": {"N": [300], "lambdas": [1.5, 3.5]}})
    header, rows = _read_csv(run("green", cfg, str(tmp_path)))
    for r in rows:
        row = dict(zip(header, r))
        assert float(row["rate_right"]) == pytest.approx(float(row["predicted_right"]), rel=0.03)


def test_pseudospec_command(tmp_path):
    cfg = validate_config({**M1, "grid": {"N": [20], "rect": [0, 9, -1, 1], "resolution": 5}})
    header, rows = _read_csv(run("pseudospec", cfg, str(tmp_path)))
    assert header == ["re", "im", "sigma_min"]
    assert len(rows) == 25


def test_convergence_command(tmp_path):
    cfg = parse_config(os.path.join(CONFIGS, "monomer.yaml"))
    header, rows = _read_csv(run("convergence", cfg, str(tmp_path)))
    assert header[:3] == ["N", "residual", "predicted_bound"]
    assert [int(r[0]) for r in rows] == [50, 100, 200, 400]
    meta = json.loads((tmp_path / "convergence.meta.json").read_text())
    assert -meta["fitted_slope"] == pytest.approx(meta["predicted_B"], rel=0.1)


def test_hn_command_flip(tmp_path):
    cfg = validate_config({**HN, "grid": {"N": [400], "d_range": [0.0, 3.0], "d_points": 61}})
    header, rows = _read_csv(run("hn", cfg, str(tmp_path)))
    assert header == ["d", "lambda", "rate_left", "rate_right", "verdict"]
    skin = [float(r[0]) for r in rows if r[4] == "skin"]
    bulk = [float(r[0]) for r in rows if r[4] == "bulk"]
    assert max(skin) < 2 * math.sinh(0.5) < min(bulk)


def test_json_format_and_determinism(tmp_path):
    cfg = validate_config(HN)
    p1 = run("regions", cfg, str(tmp_path / "a"), fmt="json", seed=5)
    p2 = run("regions", cfg, str(tmp_path / "b"), fmt="json", seed=5)
    doc = json.loads(open(p1).read())
    assert doc["metadata"]["seed"] == 5
    assert doc["columns"] == ["kind", "lo", "hi"]
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_main_success_and_errors(tmp_path, capsys):
    good = _write_cfg(tmp_path, HN)
    assert main(["regions", "--config", good, "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "regions.csv").exists()
    capsys.readouterr()

    bad = _write_cfg(tmp_path, {"chain": {"gamma": 1.0, "lengths": [], "spacings": []}}, "bad.yaml")
    assert main(["regions", "--config", bad]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ValidationError" and err["problems"]

    nodef = _write_cfg(tmp_path, M1, "nodef.yaml")
    assert main(["defect", "--config", nodef, "--out", str(tmp_path / "p")]) == 2

    assert main(["regions", "--config", good, "--seed", "-1"]) == 2


def test_console_script(tmp_path):
    cfg = _write_cfg(tmp_path, HN)
    out = subprocess.run([sys.executable, "-m", "tbands.cli", "regions", "--config", cfg,
                          "--out", str(tmp_path / "x")], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip().endswith("regions.csv")
