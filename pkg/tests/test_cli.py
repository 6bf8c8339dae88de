"""Tests for configuration parsing, CSV emission and the CLI."""

import os

import numpy as np
import pytest

from nvsim.cli import run
from nvsim.config import (Config, ConfigError, RunManifest, format_number,
                          parse_config, write_csv)
from nvsim.fitting import synthesize_dataset
from nvsim.model import FineStructureParams


def make_config(tmp_path, extra=""):
    out = tmp_path / "out"
    path = tmp_path / "cfg.txt"
    path.write_text(f"output_dir = {out}\n{extra}", encoding="utf-8")
    return str(path), out


def write_fixture(tmp_path, n=8, noise=0.0):
    rng = np.random.default_rng(17)
    strains = np.sort(rng.uniform(0.5, 20.0, n))
    rows = ["defect_id,line_ghz"]
    for d in synthesize_dataset(FineStructureParams(), strains,
                                noise=noise, seed=18):
        rows.extend(f"{d.id},{x:.9f}" for x in d.lines)
    path = tmp_path / "fixture.csv"
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return str(path)


class TestConfig:
    def test_defaults_present(self):
        cfg = Config()
        assert cfg["lambda_z"] == 5.3
        assert cfg["strain_points"] == 801

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config("lambda_zz = 4\n")

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigError, match="bad value"):
            parse_config("lambda_z = five\n")

    def test_comments_and_blanks(self):
        cfg = parse_config("# a comment\n\nd_es = 1.5  # inline\n")
        assert cfg["d_es"] == 1.5

    def test_dump_round_trip(self):
        cfg = parse_config("lambda_z = 4.2\nstrain_points = 101\n")
        again = parse_config(cfg.dump())
        assert again.values == cfg.values

    def test_typed_accessors(self):
        cfg = parse_config("lambda_perp = 0\nk_isc_z = 0.01\n")
        assert cfg.fine_structure().lambda_perp == 0.0
        assert cfg.rates().k_isc_z == 0.01
        assert cfg.temperature_map().r0 > 0
        assert cfg.strain_grid().size == 801


class TestWriteCsv:
    def test_nine_significant_digits(self, tmp_path):
        path = tmp_path / "x.csv"
        write_csv(str(path), ["a"], [(1.42,)])
        assert path.read_text() == "a\n1.42000000\n"

    def test_header_only(self, tmp_path):
        path = tmp_path / "x.csv"
        write_csv(str(path), ["a", "b"], [])
        assert path.read_text() == "a,b\n"

    def test_rewrite_byte_identical(self, tmp_path):
        path = tmp_path / "x.csv"
        rows = [(0.1 * k, "tag") for k in range(10)]
        write_csv(str(path), ["v", "t"], rows)
        first = path.read_bytes()
        write_csv(str(path), ["v", "t"], rows)
        assert path.read_bytes() == first

    def test_ragged_rows_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            write_csv(str(tmp_path / "x.csv"), ["a", "b"], [(1.0,)])

    def test_format_number(self):
        assert format_number(1.42) == "1.42000000"
        assert format_number(0.000123456789) == "0.000123456789"


class TestManifest:
    def test_render_contains_command_and_outputs(self):
        man = RunManifest(command="nvsim levels", config=Config(),
                          outputs=["levels.csv"])
        text = man.render()
        assert "command = nvsim levels" in text
        assert "output levels.csv" in text
        assert "version = " in text
        assert "lambda_z = 5.3" in text


class TestCliCommands:
    def test_levels(self, tmp_path, capsys):
        cfg, out = make_config(tmp_path)
        assert run(["--config", cfg, "levels"]) == 0
        text = capsys.readouterr().out
        assert "A2 - A1" in text
        assert (out / "levels.csv").exists()
        assert (out / "manifest.txt").exists()

    def test_levels_a2_a1_value(self, tmp_path):
        cfg, out = make_config(tmp_path, "lambda_perp = 0\n")
        assert run(["--config", cfg, "levels"]) == 0
        rows = (out / "levels.csv").read_text().splitlines()[1:]
        e = {r.split(",")[0]: float(r.split(",")[1]) for r in rows}
        assert e["A2"] - e["A1"] == pytest.approx(3.10, abs=1e-9)

    def test_gpa_flag_matches_strain_flag(self, tmp_path):
        cfg, out = make_config(tmp_path)
        assert run(["--config", cfg, "lines", "--gpa", "0.004"]) == 0
        a = (out / "lines.csv").read_bytes()
        assert run(["--config", cfg, "lines", "--strain", "4"]) == 0
        assert (out / "lines.csv").read_bytes() == a

    def test_avg_within_band(self, tmp_path):
        cfg, out = make_config(tmp_path)
        assert run(["--config", cfg, "avg", "--max-strain", "30",
                    "--points", "61"]) == 0
        rows = (out / "avg.csv").read_text().splitlines()[1:]
        vals = [float(r.split(",")[1]) for r in rows]
        assert all(abs(v - 1.42) < 0.05 for v in vals)

    def test_fit_reports_parameters(self, tmp_path, capsys):
        cfg, out = make_config(tmp_path)
        fixture = write_fixture(tmp_path)
        init = "lambda_z = 5.0\nd_es = 1.3\ndelta_cap = 1.4\n"
        cfg2, out2 = make_config(tmp_path, init)
        assert run(["--config", cfg2, "fit", fixture]) == 0
        report = (out2 / "fit_report.txt").read_text()
        assert "lambda_z_ghz = 5.300000" in report
        assert "d_es_ghz = 1.420000" in report
        assert "delta_cap_ghz = 1.550000" in report
        assert (out2 / "fit_strains.csv").exists()

    def test_env_config(self, tmp_path, monkeypatch):
        cfg, out = make_config(tmp_path)
        monkeypatch.setenv("NVSIM_CONFIG", cfg)
        assert run(["levels"]) == 0
        assert (out / "levels.csv").exists()


class TestExitCodes:
    def test_unknown_subcommand(self, capsys):
        assert run(["frobnicate"]) == 1

    def test_unknown_flag(self, tmp_path, capsys):
        cfg, _ = make_config(tmp_path)
        assert run(["--config", cfg, "levels", "--bogus"]) == 1

    def test_missing_config(self, capsys):
        assert run(["--config", "/nonexistent/cfg", "levels"]) == 1

    def test_malformed_fit_csv(self, tmp_path, capsys):
        cfg, _ = make_config(tmp_path)
        bad = tmp_path / "bad.csv"
        bad.write_text("defect_id,line_ghz\nnv1,oops\n")
        assert run(["--config", cfg, "fit", str(bad)]) == 1
        assert "line 2" in capsys.readouterr().err

    def test_numerical_failure(self, tmp_path, capsys):
        cfg, _ = make_config(tmp_path)
        assert run(["--config", cfg, "odmr", "--strain", "0.5"]) == 2


class TestDeterminism:
    def test_rerun_byte_identical(self, tmp_path):
        cfg, out = make_config(tmp_path, "strain_points = 41\n")
        args = ["--config", cfg, "excitation", "--strain", "3",
                "--detuning-points", "41"]
        assert run(args) == 0
        first = {p: (out / p).read_bytes() for p in os.listdir(out)}
        assert run(args) == 0
        second = {p: (out / p).read_bytes() for p in os.listdir(out)}
        assert first == second
