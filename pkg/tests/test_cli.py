"""The command-line surface: config grammar, outputs, exit codes,
determinism."""

import json
import os
from pathlib import Path

import numpy as np
import pytest

from subdiff.cli import (
    EXIT_FAIL,
    EXIT_OK,
    EXIT_USAGE,
    main,
)
from subdiff.config import ConfigError, load_config, spec_from_mapping
from subdiff.bernstein import TemperedStable


BASE_CONFIG = """\
[spec]
kind = tempered_stable
alpha = 0.5
temper = 1.0

[run]
seed = 42
n_paths = 400
dtau = 1e-2
horizon = 1.0
t_start = 0.25
t_stop = 1.0
t_step = 0.25
x_start = 0.0
x_stop = 2.0
x_step = 0.5

[test]
times = 0.5,1.0

[io]
output_dir = {out}
"""


@pytest.fixture()
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(BASE_CONFIG.format(out=str(tmp_path / "out")))
    return tmp_path


class TestConfig:
    def test_round_trip(self, workdir):
        cfg = load_config(workdir / "exp.cfg")
        assert cfg.seed == 42
        spec = cfg.spec()
        assert isinstance(spec, TemperedStable)
        assert list(cfg.t_grid()) == [0.25, 0.5, 0.75, 1.0]

    def test_unknown_key_rejected(self, workdir):
        bad = workdir / "bad.cfg"
        bad.write_text("[run]\nspeed = 3\n")
        with pytest.raises(ConfigError):
            load_config(bad)

    def test_unknown_section_rejected(self, workdir):
        bad = workdir / "bad.cfg"
        bad.write_text("[extras]\nx = 1\n")
        with pytest.raises(ConfigError):
            load_config(bad)

    def test_missing_file_rejected(self, workdir):
        with pytest.raises(ConfigError):
            load_config(workdir / "nope.cfg")

    def test_validation(self, workdir):
        with pytest.raises(ConfigError):
            load_config(workdir / "exp.cfg", {"run.dtau": "-1"})
        with pytest.raises(ConfigError):
            load_config(workdir / "exp.cfg", {"test.gamma": "0.5"})

    def test_tabulated_spec_from_table(self, workdir):
        table = workdir / "tail.csv"
        ts = np.geomspace(1e-6, 1e3, 60)
        rows = "\n".join(f"{t},{t**-0.5}" for t in ts)
        table.write_text(rows + "\n")
        spec = spec_from_mapping({"kind": "tabulated_levy", "tail_table": str(table)})
        assert spec.tail(1.0) == pytest.approx(1.0, rel=1e-6)
        assert spec.tail(4.0) == pytest.approx(0.5, rel=1e-6)


class TestExponentCommand:
    def test_prints_value(self, capsys):
        code = main(["exponent", "--kind", "stable", "--alpha", "0.5", "--u", "4"])
        assert code == EXIT_OK
        assert capsys.readouterr().out.strip() == "2"

    def test_tempered(self, capsys):
        code = main(
            ["exponent", "--kind", "tempered_stable", "--alpha", "0.5", "--temper", "1", "--u", "3"]
        )
        assert code == EXIT_OK
        assert capsys.readouterr().out.strip() == "1"

    def test_usage_error(self, capsys):
        assert main(["exponent", "--kind", "stable", "--u", "-1"]) == EXIT_USAGE


class TestTabularCommands:
    def test_density_csv(self, workdir, capsys):
        assert main(["density", "--config", "exp.cfg"]) == EXIT_OK
        lines = (workdir / "out" / "density.csv").read_text().splitlines()
        assert lines[0] == "# schema_version=1"
        assert lines[1] == "t,x,value,err_estimate"
        assert len(lines) == 2 + 4 * 5

    def test_kernel_csv(self, workdir):
        assert main(["kernel", "--config", "exp.cfg"]) == EXIT_OK
        lines = (workdir / "out" / "kernel.csv").read_text().splitlines()
        assert lines[1] == "t,x,value,err_estimate"

    def test_simulate_csv(self, workdir):
        assert main(["simulate", "--config", "exp.cfg", "--set", "run.n_paths=3"]) == EXIT_OK
        lines = (workdir / "out" / "paths.csv").read_text().splitlines()
        assert lines[1] == "path_id,clock,value"
        ids = {line.split(",")[0] for line in lines[2:]}
        assert ids == {"0", "1", "2"}

    def test_simulate_inverse_process(self, workdir):
        code = main(
            [
                "simulate", "--config", "exp.cfg",
                "--set", "run.n_paths=2", "--set", "run.process=inverse",
                "--set", "run.stationary=true",
            ]
        )
        assert code == EXIT_OK

    def test_oracle_lil(self, workdir):
        code = main(
            ["oracle", "--config", "exp.cfg", "--mode", "lil", "--t-values", "1000", "10000"]
        )
        assert code == EXIT_OK
        lines = (workdir / "out" / "oracle_lil.csv").read_text().splitlines()
        assert len(lines) == 4

    def test_output_dir_env_override(self, workdir, monkeypatch):
        monkeypatch.setenv("SUBDIFF_OUTPUT_DIR", str(workdir / "elsewhere"))
        assert main(["kernel", "--config", "exp.cfg"]) == EXIT_OK
        assert (workdir / "elsewhere" / "kernel.csv").exists()
        assert not (workdir / "out" / "kernel.csv").exists()

    def test_writes_stay_inside_output_dir(self, workdir):
        before = {p for p in workdir.rglob("*") if p.is_file()}
        main(["density", "--config", "exp.cfg"])
        created = {p for p in workdir.rglob("*") if p.is_file()} - before
        assert created
        out = workdir / "out"
        assert all(out in p.parents for p in created)


class TestDiagnoseCommand:
    def base_args(self, extra=()):
        return [
            "diagnose", "msd", "--config", "exp.cfg",
            "--set", "run.n_paths=1500", "--set", "test.times=0.5,1.0",
            *extra,
        ]

    def test_pass_exit_code_and_report(self, workdir):
        assert main(self.base_args()) == EXIT_OK
        report = json.loads((workdir / "out" / "report_msd.json").read_text())
        assert report["schema_version"] == 1
        assert report["pass"] is True
        assert report["config"]["run"]["n_paths"] == 1500
        assert "config_hash" in report
        assert "runtime" not in report

    def test_byte_identical_reports(self, workdir):
        main(self.base_args(["--seed", "7"]))
        first = (workdir / "out" / "report_msd.json").read_bytes()
        main(self.base_args(["--seed", "7", "--workers", "3"]))
        second = (workdir / "out" / "report_msd.json").read_bytes()
        assert first == second

    def test_unknown_test_name_is_usage_error(self, workdir, capsys):
        assert main(["diagnose", "bogus", "--config", "exp.cfg"]) == EXIT_USAGE

    def test_config_error_exit(self, workdir):
        assert main(["diagnose", "msd", "--config", "missing.cfg"]) == EXIT_USAGE


class TestFkCommand:
    def test_known_payoff_with_oracle(self, workdir, capsys):
        code = main(
            [
                "fk", "--config", "exp.cfg", "--g", "cos", "--t", "1.0",
                "--set", "run.n_paths=1500", "--set", "run.du=5e-3",
            ]
        )
        assert code == EXIT_OK
        lines = (workdir / "out" / "fk.csv").read_text().splitlines()
        _, est, se, oracle = lines[2].split(",")
        assert abs(float(est) - float(oracle)) < 4.0 * float(se) + 1e-2
