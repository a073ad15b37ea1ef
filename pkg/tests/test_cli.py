import csv
import json

import pytest

from h3plateau.cli import build_parser, main
from h3plateau.mesh import read_obj
from h3plateau.pipeline import RunConfig, load_config, parse_config_text


def run(tmp_path, *args):
    return main([*args, "--out-dir", str(tmp_path)])


def read_json(path):
    return json.loads(path.read_text())


# ------------------------------------------------------------------ configuration


def test_config_precedence_three_layers(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# overrides\neps1 = 0.105\nsamples = 32\ngrad-tol = 1e-7\n")
    rc = load_config(cfg, {"eps1": 0.107, "max_iter": None})
    assert rc.eps1 == 0.107  # flag beats file
    assert rc.samples_per_unit == 32  # file beats default
    assert rc.grad_tol == 1e-7
    assert rc.del1 == RunConfig().del1  # default survives
    assert rc.max_iter == RunConfig().max_iter  # unset flag ignored


def test_config_precedence_through_cli(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("eps1 = 0.105\ndel1 = 0.09\n")
    assert run(tmp_path, "curve", "--n", "1", "--config", str(cfg), "--eps1", "0.107") == 0
    summary = read_json(tmp_path / "gamma_1.json")
    assert summary["eps1"] == 0.107 and summary["del1"] == 0.09


def test_config_parsing():
    d = parse_config_text("zd = 0.04\nprobe = 0,0,1.5,2\nmargin = none\nout-dir = x  # trailing\n")
    assert d == {"z_d": 0.04, "probe": (0.0, 0.0, 1.5, 2.0), "margin": None, "out_dir": "x"}
    for bad in ("nonsense = 1", "eps1", "probe = 1,2", "eps1 = "):
        with pytest.raises(ValueError):
            parse_config_text(bad)


def test_bad_config_file_is_usage_error(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert run(tmp_path, "curve", "--n", "1", "--config", str(cfg)) == 2
    assert run(tmp_path, "curve", "--n", "1", "--config", str(tmp_path / "missing.cfg")) == 2


def test_parser_flags():
    a = build_parser().parse_args(["diagnose", "--n-max", "2", "--probe", "0,0,1.5,1.0", "--zd", "0.05", "--samples", "32"])
    assert a.n_max == 2 and a.probe == (0.0, 0.0, 1.5, 1.0) and a.z_d == 0.05 and a.samples_per_unit == 32
    with pytest.raises(SystemExit):
        build_parser().parse_args(["solve", "--probe", "1,2"])


# ------------------------------------------------------------------ commands


def test_curve_command(tmp_path):
    assert run(tmp_path, "curve", "--n", "2") == 0
    summary = read_json(tmp_path / "gamma_2.json")
    assert summary["simple"] is True and summary["n"] == 2
    lines = (tmp_path / "gamma_2.txt").read_text().splitlines()
    assert all(len(line.split()) == 3 for line in lines)


def test_curve_exit_codes(tmp_path, capsys):
    assert run(tmp_path, "curve", "--n", "0") == 2
    assert run(tmp_path, "curve") == 2
    assert run(tmp_path, "curve", "--n", "2", "--eps1", "0.3", "--del1", "0.3") == 3
    assert "del1 < eps1" in capsys.readouterr().err


def test_tunnel_and_domain_commands(tmp_path):
    assert run(tmp_path, "tunnel", "--n", "2") == 0
    info = read_json(tmp_path / "tunnel_2.json")
    assert info["scale"] == pytest.approx(1 / 3)
    assert read_obj(tmp_path / "tunnel_2.obj").euler_characteristic() == 2
    assert run(tmp_path, "domain", "--n", "2") == 0
    dom = read_json(tmp_path / "domain_2.json")
    assert dom["c_n"] == 47 and dom["tunnel_count"] == 2
    assert dom["mean_convexity_report"]["mean_convex"] is True


def test_pinch_exit_code(tmp_path):
    assert run(tmp_path, "tunnel", "--n", "1", "--eps1", "0.5") == 4
    assert run(tmp_path, "solve", "--n", "1", "--eps1", "0.5") == 4


def test_solve_early_stop_writes_files(tmp_path):
    assert run(tmp_path, "solve", "--n", "2", "--max-iter", "10") == 5
    rep = read_json(tmp_path / "report_2.json")
    assert rep["status"] == "max_iter" and rep["iterations"] == 10
    assert (tmp_path / "disk_2.obj").exists()


def test_verify_needs_mesh(tmp_path):
    assert run(tmp_path, "verify", "--n", "1") == 6


def test_solve_then_verify(tmp_path):
    assert run(tmp_path, "solve", "--n", "1") == 0
    rep = read_json(tmp_path / "report_1.json")
    assert rep["status"] == "ok" and rep["feasibility"] <= 1e-6
    assert run(tmp_path, "verify", "--n", "1") == 0
    ver = read_json(tmp_path / "verify_1.json")
    assert ver["word"] == "d t1 D T1"
    assert ver["word_nontrivial"] and ver["word_delta_killed_trivial"]
    assert ver["beta_count"] == 1 and ver["beta_heights"][0] == pytest.approx(2.0, abs=0.05)
    assert set(ver) == {"word", "word_nontrivial", "word_delta_killed_trivial", "beta_count", "beta_heights", "winding"}
    assert run(tmp_path, "verify", "--n", "1", "--generators", "3") == 0
    assert read_json(tmp_path / "verify_1.json")["word"].count("D") == 3


def test_verify_reports_failed_check(tmp_path):
    # a coarse disk far from the axis segment has no crossing
    assert run(tmp_path, "solve", "--n", "1", "--max-iter", "5", "--l-max", "0.4") == 5
    obj = tmp_path / "disk_1.obj"
    obj.write_text("v 3 3 0.1\nv 3.1 3 0.1\nv 3 3.1 0.1\nf 1 2 3\n")
    assert run(tmp_path, "verify", "--n", "1") == 7
    assert read_json(tmp_path / "verify_1.json")["beta_count"] == 0


def test_diagnose(tmp_path):
    assert run(tmp_path, "diagnose", "--n-max", "0") == 2
    assert run(tmp_path, "diagnose", "--n-max", "1", "--l-max", "0.3", "--probe", "0,0,2,0.5") == 0
    rows = list(csv.DictReader((tmp_path / "sweep.csv").open()))
    assert len(rows) == 1 and rows[0]["status"] == "ok" and rows[0]["beta_count"] == "1"
    first = (tmp_path / "sweep.csv").read_bytes()
    assert run(tmp_path, "diagnose", "--n-max", "1", "--l-max", "0.3", "--probe", "0,0,2,0.5") == 0
    assert (tmp_path / "sweep.csv").read_bytes() == first
    # a smaller probe ball sees less area
    assert run(tmp_path, "diagnose", "--n-max", "1", "--l-max", "0.3", "--probe", "0,0,2,0.1") == 0
    small = list(csv.DictReader((tmp_path / "sweep.csv").open()))[0]
    assert float(small["ball_area"]) < float(rows[0]["ball_area"])


def test_diagnose_partial_failure(tmp_path):
    assert run(tmp_path, "diagnose", "--n-max", "1", "--eps1", "0.5") == 7
    rows = list(csv.DictReader((tmp_path / "sweep.csv").open()))
    assert rows[0]["status"] == "neck_pinch"
