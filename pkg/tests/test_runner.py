import csv
import json
import os

import numpy as np
import pytest
import yaml

from analogctl.runner.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from analogctl.runner.config import ConfigError, load_config, parse_config
from analogctl.runner.experiments import pearson, run_experiment
from analogctl.runner.reports import NonFiniteOutput, Table, format_value, write_table

SMALL_OPT = {"version": 1, "method": "optimize", "gate": "pi-gate", "grid": {"n_t": 32},
             "bath": {"family": "lorentzian_dip", "n_omega": 1024},
             "optimize": {"lambdas": [1.0e3, 1.0e5], "max_iters": 40},
             "spectra": {"n_omega": 64}}


def write_cfg(tmp_path, doc, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


# ------------------------------------------------------------------ config
@pytest.mark.parametrize("patch, field", [
    ({"method": "anneal"}, "method"),
    ({"version": 2}, "version"),
    ({"grid": {"n_t": 4}}, "grid.n_t"),
    ({"bath": {"family": "pink"}}, "bath.family"),
    ({"optimize": {"alpha": 1.5}}, "optimize.alpha"),
    ({"optimize": {"max_step": 0}}, "optimize.max_step"),
    ({"optimize": {"lambdas": []}}, "optimize.lambdas"),
    ({"optimize": {"bogus": 1}}, "optimize.bogus"),
    ({"gate": "hadamard-ish"}, "gate"),
])
def test_invalid_config_names_field(patch, field):
    doc = {**SMALL_OPT, **patch}
    with pytest.raises(ConfigError) as info:
        parse_config(doc)
    assert info.value.field == field


def test_dd_config_errors():
    doc = {"version": 1, "method": "dd-sequence", "dd": {"pulse_counts": [3]}}
    with pytest.raises(ConfigError, match=r"dd.pulse_counts\[0\]"):
        parse_config(doc)
    with pytest.raises(ConfigError, match="empty sweep"):
        parse_config({"version": 1, "method": "dd-sequence"})


def test_exponent_without_dot_is_float(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("version: 1\noptimize: {lambdas: [1e3, 1e5], tol: 1e-6}\n")
    cfg = load_config(str(path))
    assert cfg["optimize"]["lambdas"] == [1000.0, 100000.0]
    assert cfg["optimize"]["tol"] == 1e-6


def test_defaults_filled():
    cfg = parse_config({"version": 1})
    assert cfg["optimize"]["max_step"] == 0.05
    assert cfg["grid"]["n_t"] == 256


def test_cli_config_error_exit_code(tmp_path, capsys):
    path = write_cfg(tmp_path, {**SMALL_OPT, "grid": {"n_t": 2}})
    assert main(["run", "--config", path, "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "grid.n_t" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG
    assert main(["run", "--config", path, "--threads", "0"]) == EXIT_CONFIG


def test_validate_config(tmp_path, capsys):
    path = write_cfg(tmp_path, SMALL_OPT)
    assert main(["validate-config", "--config", path]) == EXIT_OK
    printed = yaml.safe_load(capsys.readouterr().out)
    assert printed["optimize"]["max_iters"] == 40
    assert not (tmp_path / "out").exists()


def test_numerical_abort_writes_diagnostics(tmp_path, monkeypatch, capsys):
    import analogctl.runner.cli as cli

    def boom(*a, **k):
        raise FloatingPointError("non-finite error functional")

    monkeypatch.setattr(cli, "run_experiment", boom)
    out = tmp_path / "o"
    path = write_cfg(tmp_path, SMALL_OPT)
    assert main(["run", "--config", path, "--out", str(out)]) == EXIT_NUMERICAL
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["error"] == "FloatingPointError"
    assert diag["config"]["method"] == "optimize"
    assert "diagnostics" in capsys.readouterr().err


# ----------------------------------------------------------------- reports
def test_table_refuses_non_finite(tmp_path):
    t = Table("bad", ["x [1]"])
    t.add(float("nan"))
    with pytest.raises(NonFiniteOutput, match="bad.csv"):
        write_table(t, tmp_path)
    assert not (tmp_path / "bad.csv").exists()


def test_format_value():
    assert format_value(0.0) == "0"
    assert format_value(-0.0) == "0"
    assert format_value(np.float64(1 / 3)) == "0.333333333333"
    assert format_value(True) == "true"
    assert format_value(np.int64(7)) == "7"


def test_pearson():
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    assert pearson([1, 1, 1], [1, 2, 3]) is None


# ------------------------------------------------------------------- runs
def test_run_writes_tables_with_units_and_reruns_from_manifest(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    path = write_cfg(tmp_path, SMALL_OPT)
    assert main(["run", "--config", path, "--out", str(out1)]) == EXIT_OK
    manifest = json.loads((out1 / "manifest.json").read_text())
    assert set(manifest["files"]) == {"sweep.csv", "controls.csv", "spectra.csv"}
    for name in manifest["files"]:
        header, rows = read_csv(out1 / name)
        assert rows
        numeric = [h for h in header if h not in ("index", "path", "status", "iterations",
                                                   "selected", "sequence")]
        assert all("[" in h for h in numeric), header
    assert main(["run", "--config", str(out1 / "manifest.json"), "--out", str(out2)]) == EXIT_OK
    for name in manifest["files"]:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_thread_count_does_not_change_output(tmp_path):
    path = write_cfg(tmp_path, SMALL_OPT)
    assert main(["sweep", "--config", path, "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["sweep", "--config", path, "--out", str(tmp_path / "b"),
                 "--threads", "3"]) == EXIT_OK
    assert (tmp_path / "a/sweep.csv").read_bytes() == (tmp_path / "b/sweep.csv").read_bytes()
    assert not (tmp_path / "a/controls.csv").exists()


def test_sweep_reference_row_and_selection():
    cfg = parse_config({**SMALL_OPT, "optimize": {**SMALL_OPT["optimize"],
                                                  "error_threshold": 1.0}})
    out = run_experiment(cfg, "sweep")
    sweep = out.table("sweep")
    assert sweep.column("lambda")[0] == 0.0
    assert sweep.column("error_ratio")[0] == 1.0
    # a threshold everything meets selects the smallest E_S, which is the reference
    assert sweep.column("selected") == [True, False, False]


def test_bang_bang_sweep_energy_increases():
    cfg = load_config(os.path.join(os.path.dirname(__file__), "..", "configs",
                                   "bang_bang_sweep.yaml"))
    out = run_experiment(cfg, "sweep")
    sweep = out.table("sweep")
    assert len(sweep) == 15
    assert sweep.column("n_pulses") == list(range(2, 31, 2))
    es = sweep.column("E_S")
    assert all(b > a for a, b in zip(es, es[1:]))


def test_zero_bath_gives_zero_errors():
    cfg = parse_config({"version": 1, "method": "dd-sequence", "bath": {"family": "zero"},
                        "grid": {"n_t": 64}, "dd": {"pulse_counts": [2, 4]}})
    sweep = run_experiment(cfg, "sweep").table("sweep")
    assert sweep.column("error") == [0.0, 0.0]
    assert sweep.column("error_ratio") == [1.0, 1.0]


def test_spectra_subcommand(tmp_path):
    doc = {"version": 1, "method": "dd-sequence", "grid": {"n_t": 64},
           "bath": {"family": "ohmic", "n_omega": 1024},
           "dd": {"sequences": [{"kind": "UDD", "n": 3}]}, "spectra": {"n_omega": 32}}
    path = write_cfg(tmp_path, doc)
    assert main(["spectra", "--config", path, "--out", str(tmp_path / "o")]) == EXIT_OK
    header, rows = read_csv(tmp_path / "o/spectra.csv")
    assert header[:2] == ["path", "omega [rad/t_gate]"]
    assert len(rows) == 32
    assert {r[0] for r in rows} == {"0:UDD-3"}


def test_bloch_and_leakage_methods():
    bloch = run_experiment(parse_config({"version": 1, "method": "bloch", "gate": "x",
                                         "grid": {"n_t": 64}, "bath": {"family": "ohmic"},
                                         "bloch": {"n_steps": 20}}))
    table = bloch.table("bloch")
    assert len(table) == 21
    assert max(table.column("norm")) <= 1 + 1e-9
    leak = run_experiment(parse_config({"version": 1, "method": "leakage", "gate": "x",
                                        "grid": {"n_t": 64}, "bath": {"family": "ohmic"},
                                        "leakage": {"detunes": [0.0, 5.0], "n_omega": 2048}}))
    surplus = leak.table("surplus")
    assert surplus.column("detune") == [0.0, 5.0]
    assert all(s >= -1e-10 for s in surplus.column("relative_surplus"))
