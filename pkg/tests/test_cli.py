import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from brownshift.cli import config_hash, load_schema, main, run

NORM_CFG = {
    "command": "norm",
    "params": {"sigma": 1.0},
    "truncation": {"deg_z1": 20, "deg_z2": 20, "deg_z": 20},
    "specs": [{"kind": "TypeI", "phi": {"zeros": [0, 0]}}],
}


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_schema_is_valid():
    jsonschema.Draft202012Validator.check_schema(load_schema())


def test_norm_command(tmp_path):
    out = tmp_path / "r.json"
    assert main(["--config", write(tmp_path, NORM_CFG), "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["status"] == "pass" and rep["schema_version"] == "1"
    assert abs(rep["results"]["norms"][0]["norm"] - np.sqrt(2)) < 1e-6
    assert rep["config_sha256"] == config_hash(NORM_CFG)
    assert rep["truncation"] == {"deg_z": 20, "deg_z1": 20, "deg_z2": 20, "tol": 1e-10}


def test_reports_are_byte_identical(tmp_path):
    cfg = write(tmp_path, NORM_CFG)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["--config", cfg, "--out", str(a)])
    main(["--config", cfg, "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_equiv_kind_obstruction(tmp_path):
    cfg = {
        "command": "equiv",
        "params": {"sigma": 1.0},
        "truncation": {"deg_z1": 4, "deg_z2": 8, "deg_z": 8},
        "specs": [{"kind": "TypeI", "phi": {"zeros": [0]}}, {"kind": "TypeII", "phi": {"zeros": [0, 0]}}],
    }
    out = tmp_path / "r.json"
    assert main(["--config", write(tmp_path, cfg), "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["results"]["verdict"] == {"equivalent": False, "obstructions": ["kind"], "gaps": {"sigma": 0.0}}
    cfg["options"] = {"expect": "equivalent"}
    assert main(["--config", write(tmp_path, cfg), "--out", str(out)]) == 1
    assert json.loads(out.read_text())["failed"] == ["verdict"]


def test_equiv_equivalent_pair_builds_intertwiner(tmp_path):
    cfg = {
        "command": "equiv",
        "params": {"sigma": 0.5},
        "truncation": {"deg_z1": 8, "deg_z2": 8, "deg_z": 8},
        "specs": [
            {"kind": "TypeI", "phi": {"zeros": [0, 0]}, "psi": {"V": [[1]]}},
            {"kind": "TypeI", "phi": {"zeros": [0, 0]}, "psi": {"b": {"zeros": [0]}, "V": [[1]]}},
        ],
        "options": {"expect": "equivalent"},
    }
    code, rep, _ = run(cfg)
    assert code == 0, rep["failed"]
    assert rep["results"]["intertwiner"]["intertwining_residual"] < 1e-8


def test_malformed_zero_exits_2(tmp_path, capsys):
    cfg = dict(NORM_CFG, specs=[{"kind": "TypeI", "phi": {"zeros": [{"re": 1.0, "im": 0.0}]}}])
    assert main(["--config", write(tmp_path, cfg), "--out", str(tmp_path / "r.json")]) == 2
    assert "ValidationError" in capsys.readouterr().err


@pytest.mark.parametrize(
    "cfg",
    [
        dict(NORM_CFG, extra=1),
        dict(NORM_CFG, command="plot"),
        dict(NORM_CFG, params={"sigma": -1}),
        dict(NORM_CFG, specs=[{"kind": "TypeI", "phi": {}, "colour": "red"}]),
    ],
)
def test_schema_rejections_exit_2(tmp_path, cfg):
    assert main(["--config", write(tmp_path, cfg), "--out", str(tmp_path / "r.json")]) == 2


def test_unreadable_config_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["--config", str(bad)]) == 2


def test_conditioning_error_exits_2(tmp_path):
    cfg = dict(NORM_CFG, specs=[{"kind": "TypeI", "phi": {"zeros": [0.95]}}])
    code, rep, _ = run(cfg)
    assert code == 2 and rep["error"].startswith("errors.ConditioningError")


@pytest.mark.parametrize(
    "cfg",
    [
        {"command": "orbit", "params": {"sigma": 2.0, "theta": 1.0}, "truncation": {"deg_z1": 12, "deg_z2": 12, "deg_z": 12}, "options": {"n_max": 12}},
        {"command": "gfn", "params": {"sigma": 1.0}, "truncation": {"deg_z1": 2, "deg_z2": 48, "deg_z": 48}, "specs": [{"kind": "TypeII", "phi": {"zeros": [0.5]}}]},
        {"command": "subspace", "params": {"sigma": 1.0}, "truncation": {"deg_z1": 8, "deg_z2": 8, "deg_z": 8}, "specs": [{"kind": "TypeII", "phi": {"zeros": [0, 0]}, "psi": {"V": [[0.7071067811865476, -0.7071067811865476]]}}]},
        {"command": "c00", "params": {"sigma": 1.0}, "truncation": {"deg_z1": 4, "deg_z2": 4, "deg_z": 4}, "options": {"n_max": 20, "max_degree": 2}},
        {"command": "noncyclic", "params": {"sigma": 1.0, "theta": 1.0472}, "truncation": {"deg_z1": 10, "deg_z2": 10, "deg_z": 10}, "options": {"n_max": 10}},
    ],
)
def test_commands_pass(cfg):
    code, rep, _ = run(cfg)
    assert code == 0, rep.get("failed", rep.get("error"))


def test_c00_capped_forward_curve_is_marked():
    cfg = {"command": "c00", "params": {"sigma": 1.0}, "truncation": {"deg_z1": 4, "deg_z2": 4, "deg_z": 4}, "options": {"n_max": 20}}
    _, rep, _ = run(cfg)
    assert rep["results"]["forward_capped"] is True
    fwd = [c for c in rep["results"]["curves"] if c["label"] == "forward"][0]
    assert fwd["cap"] == 5


def test_csv_curves(tmp_path):
    cfg = {"command": "c00", "params": {"sigma": 1.0}, "truncation": {"deg_z1": 3, "deg_z2": 3, "deg_z": 3}, "options": {"n_max": 5, "max_degree": 1}}
    out = tmp_path / "r.csv"
    assert main(["--config", write(tmp_path, cfg), "--out", str(out), "--format", "csv"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "# schema_version=1"
    assert lines[4] == "n,norm,envelope,label"
    assert lines[5] == "0,1.0,1.0,adjoint-case1:alpha"


def test_tol_and_seed_flags_are_recorded(tmp_path):
    out = tmp_path / "r.json"
    main(["--config", write(tmp_path, NORM_CFG), "--out", str(out), "--tol", "1e-9", "--seed", "7"])
    rep = json.loads(out.read_text())
    assert rep["truncation"]["tol"] == 1e-9


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "brownshift", "--config", write(tmp_path, NORM_CFG)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["status"] == "pass"
