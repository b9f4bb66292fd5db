import csv
import os
import subprocess
import sys

import pytest
import yaml

from weingarten.cli import (EXIT_FAIL, EXIT_OK, EXIT_USAGE, canonical_lemma, csv_text, dump_yaml, main,
                            resolve_ineq, resolve_solve)
from weingarten.errors import ConfigurationError


def run(tmp_path, command, config=None, *extra, name="out"):
    out = tmp_path / name
    argv = [command, "--out", str(out), "--quiet"]
    if config is not None:
        path = tmp_path / f"{name}.yaml"
        path.write_text(yaml.safe_dump(config))
        argv += ["--config", str(path)]
    return main(argv + list(extra)), out


def read_files(out):
    return {p: (out / p).read_bytes() for p in sorted(os.listdir(out)) if p != "timings.yaml"}


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --- serialization -------------------------------------------------------------------

def test_yaml_floats_round_trip_17_digits():
    doc = {"a": 0.1, "b": 1.0, "c": 1e-300, "d": float("nan"), "e": [2.5, -3.0], "f": 7}
    text = dump_yaml(doc)
    back = yaml.safe_load(text)
    assert back["a"] == 0.1 and back["b"] == 1.0 and isinstance(back["b"], float)
    assert back["c"] == 1e-300 and back["e"] == [2.5, -3.0] and back["f"] == 7
    assert back["d"] != back["d"]
    assert "0.10000000000000001" in text


def test_csv_text_format():
    text = csv_text(["x", "ok"], [{"x": 1 / 3, "ok": True}])
    assert text == "x,ok\n0.33333333333333331,true\n"


def test_lemma_aliases():
    assert canonical_lemma(7) == "lemma7"
    assert canonical_lemma("19") == "corollary19"
    assert canonical_lemma("nm") == "newton_maclaurin"
    with pytest.raises(ConfigurationError):
        canonical_lemma(11)


def test_resolve_ineq_fills_defaults():
    cfg = resolve_ineq({"lemmas": [7], "samples": 100})
    assert cfg["lemmas"] == ["lemma7"]
    assert cfg["samples"] == {"lemma7": 100}
    assert cfg["n"]["lemma7"] == [2, 3, 4, 5, 6]
    with pytest.raises(ConfigurationError):
        resolve_ineq({"lemmas": [7], "bogus": 1})


def test_resolve_solve_requires_n_and_k():
    with pytest.raises(ConfigurationError):
        resolve_solve({"n": 2})
    cfg = resolve_solve({"n": 2, "k": 2})
    assert cfg["f"] == {"name": "constant", "c": 1.0}
    assert cfg["homotopy"]["epsilon"] == 0.25


# --- ineq ------------------------------------------------------------------------------------

def test_ineq_lemma7_report_and_determinism(tmp_path):
    cfg = {"lemmas": [7], "n": [4], "samples": 20000}
    code, out = run(tmp_path, "ineq", cfg, "--seed", "42")
    assert code == EXIT_OK
    rep = yaml.safe_load((out / "report_lemma7.yaml").read_text())
    assert rep["passed"] and rep["samples"] >= 20000
    code2, out2 = run(tmp_path, "ineq", cfg, "--seed", "42", name="again")
    assert read_files(out) == read_files(out2)


def test_ineq_lemma10_grid_exhausted(tmp_path):
    code, out = run(tmp_path, "ineq", {"lemmas": [10], "samples": 5000, "n": [3],
                                       "grids": {"lemma10": [[0.0, 0.5, 0.5]]}})
    assert code == EXIT_FAIL
    rep = yaml.safe_load((out / "report_lemma10.yaml").read_text())
    assert rep["passed"] is False


def test_ineq_invalid_lemma_is_usage_error(tmp_path):
    code, out = run(tmp_path, "ineq", {"lemmas": [11]})
    assert code == EXIT_USAGE and not out.exists()


def test_unknown_key_rejected(tmp_path):
    code, out = run(tmp_path, "geomcheck", {"case": "sphere", "colour": "blue"})
    assert code == EXIT_USAGE and not out.exists()


def test_bad_flags(tmp_path):
    assert main(["ineq", "--threads", "-1", "--out", str(tmp_path / "x")]) == EXIT_USAGE
    assert main(["nonsense"]) == EXIT_USAGE
    assert main(["ineq", "--seed", str(2 ** 64), "--out", str(tmp_path / "y")]) == EXIT_USAGE


def test_config_for_other_command_rejected(tmp_path):
    code, _ = run(tmp_path, "geomcheck", {"command": "solve", "n": 2, "k": 2})
    assert code == EXIT_USAGE


# --- solve -------------------------------------------------------------------------------------

def test_solve_unit_sphere(tmp_path):
    code, out = run(tmp_path, "solve", {"n": 2, "k": 2, "uniqueness_probe": {"enabled": False}})
    assert code == EXIT_OK
    summary = yaml.safe_load((out / "summary.yaml").read_text())
    assert summary["status"] == "converged"
    assert abs(summary["final"]["kappa_max"] - 1) <= 1e-6
    mon = read_csv(out / "monitor.csv")
    assert list(mon[0])[:6] == ["t", "iterations", "residual", "kappa_max", "kappa_min", "min_u"]
    field = read_csv(out / "field.csv")
    assert list(field[0]) == ["theta", "phi", "rho_or_u", "kappa_1", "kappa_2", "u_support"]
    assert len(field) == 32 * 64


def test_solve_barrier_case_confined(tmp_path):
    code, out = run(tmp_path, "solve", {"n": 2, "k": 2, "f": {"name": "power", "p": -4},
                                        "grid": {"n_theta": 16}})
    assert code == EXIT_OK
    s = yaml.safe_load((out / "summary.yaml").read_text())
    assert s["confined_to_annulus"] is True
    rows = read_csv(out / "monitor.csv")
    assert all(0.5 <= float(r["rho_min"]) and float(r["rho_max"]) <= 2.0 for r in rows)


def test_solve_missing_k_writes_nothing(tmp_path):
    code, out = run(tmp_path, "solve", {"n": 2})
    assert code == EXIT_USAGE and not out.exists()


def test_solve_tabulated_file(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("f\n" + "\n".join(["3"] * 16) + "\n")
    code, out = run(tmp_path, "solve", {"n": 3, "k": 2, "grid": {"n_theta": 16},
                                        "f": {"name": "tabulated", "file": str(path), "p": -4},
                                        "uniqueness_probe": {"enabled": False}})
    assert code == EXIT_OK
    code, _ = run(tmp_path, "solve", {"n": 3, "k": 2, "grid": {"n_theta": 32},
                                      "f": {"name": "tabulated", "file": str(path)}}, name="bad")
    assert code == EXIT_USAGE


# --- counterexample and geomcheck ----------------------------------------------------------------

def test_counterexample_defaults(tmp_path):
    code, out = run(tmp_path, "counterexample")
    assert code == EXIT_OK
    cert = yaml.safe_load((out / "certificate.yaml").read_text())
    assert cert["status"] == "complete" and cert["certificate"]["valid"]
    assert cert["t0_difference"] <= 1e-6
    rows = read_csv(out / "blowup.csv")
    assert float(rows[-1]["kappa_max"]) >= 1e3


def test_counterexample_small_amplitude_fails(tmp_path):
    code, out = run(tmp_path, "counterexample", {"amplitudes": [0.01]})
    assert code == EXIT_FAIL
    cert = yaml.safe_load((out / "certificate.yaml").read_text())
    assert cert["status"] == "search_failed"
    assert not (out / "blowup.csv").exists()


@pytest.mark.parametrize("case", ["sphere", "offcenter", "minkowski"])
def test_geomcheck_cases(tmp_path, case):
    code, out = run(tmp_path, "geomcheck", {"case": case})
    assert code == EXIT_OK
    rows = read_csv(out / "convergence.csv")
    assert len(rows) == 4 and all(r["pass"] == "true" for r in rows)
    if case == "sphere":
        assert all(float(r["kappa_error"]) <= 1e-12 for r in rows)


def test_geomcheck_failure_exit(tmp_path):
    code, _ = run(tmp_path, "geomcheck", {"case": "offcenter", "min_order": 10.0})
    assert code == EXIT_FAIL


# --- manifests ------------------------------------------------------------------------------------

@pytest.mark.parametrize("command,config", [
    ("ineq", {"lemmas": [7, 9], "samples": 2000}),
    ("counterexample", None),
    ("geomcheck", {"case": "spheroid", "refinements": 2}),
])
def test_manifest_reproduces_outputs(tmp_path, command, config):
    code, out = run(tmp_path, command, config, "--seed", "7")
    manifest = yaml.safe_load((out / "manifest.yaml").read_text())
    assert manifest["command"] == command and manifest["seed"] == 7
    code2 = main([command, "--config", str(out / "manifest.yaml"), "--out", str(tmp_path / "re"), "--quiet"])
    assert code2 == code
    assert read_files(out) == read_files(tmp_path / "re")


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "weingarten", "geomcheck", "--out", str(tmp_path / "m")],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert "exit 0" in res.stdout
