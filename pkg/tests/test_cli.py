import os

import pytest

from pbchaos import PRESETS, SCENARIOS, ScenarioConfig, run_scenario
from pbchaos.cli import (ConfigError, build_parser, env_overrides,
                         load_config_file, main, resolve_settings)
from pbchaos.output import digest_file


class TestParser:
    def test_unknown_flag_exits_2(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["section", "--bogus"])
        assert err.value.code == 2

    def test_missing_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as err:
            main([])
        assert err.value.code == 2

    def test_presets_lists_all(self, capsys):
        assert main(["presets"]) == 0
        out = capsys.readouterr().out
        for name in PRESETS:
            assert name in out

    def test_unknown_preset_exits_3(self, capsys):
        assert main(["section", "--preset", "nope"]) == 3

    def test_unknown_scenario_exits_3(self, capsys):
        assert main(["scenario", "missing"]) == 3


class TestConfigResolution:
    def test_config_file(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("[params]\nlam = 1.5\nepsilon = -0.07\n"
                       "[run]\nseed = 99\njobs = 2\n")
        settings = load_config_file(str(cfg))
        assert settings == {"lam": 1.5, "epsilon": -0.07, "seed": 99, "jobs": 2}

    def test_config_file_unknown_key(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("[x]\nwhatever = 3\n")
        with pytest.raises(ConfigError):
            load_config_file(str(cfg))

    def test_env_overrides(self, monkeypatch):
        monkeypatch.setenv("PBCHAOS_SEED", "123")
        monkeypatch.setenv("PBCHAOS_LAM", "0.9")
        monkeypatch.setenv("PBCHAOS_IGNORED", "zzz")
        over = env_overrides()
        assert over["seed"] == 123
        assert over["lam"] == 0.9
        assert "ignored" not in over

    def test_flags_beat_config_and_env(self, tmp_path, monkeypatch):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("[params]\nlam = 1.5\n")
        monkeypatch.setenv("PBCHAOS_LAM", "0.8")
        parser = build_parser()
        args = parser.parse_args(["section", "--config", str(cfg), "--lam", "0.3"])
        settings = resolve_settings(args)
        assert settings["lam"] == 0.3

    def test_env_beats_config(self, tmp_path, monkeypatch):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("[params]\nlam = 1.5\n")
        monkeypatch.setenv("PBCHAOS_LAM", "0.8")
        parser = build_parser()
        args = parser.parse_args(["section", "--config", str(cfg)])
        assert resolve_settings(args)["lam"] == 0.8

    def test_preset_fills_parameters(self):
        parser = build_parser()
        args = parser.parse_args(["ensemble", "--preset", "fig2"])
        settings = resolve_settings(args)
        assert settings["lam"] == 0.7
        assert settings["epsilon"] == -0.11
        assert settings["evolution_ms"] == 48.0
        assert settings["z0"] == 0.55


class TestCliRuns:
    def test_section_command(self, tmp_path, capsys):
        rc = main(["section", "--preset", "fig1d-a0", "--periods", "5",
                   "--grid-nz", "4", "--grid-nphi", "4",
                   "--out", str(tmp_path), "--no-svg"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "resolved configuration" in out
        assert (tmp_path / "section.csv").exists()

    def test_ensemble_command(self, tmp_path, capsys):
        rc = main(["ensemble", "--preset", "fig2", "--samples", "300",
                   "--time-points", "3", "--out", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "ensemble.csv").exists()

    def test_quantum_command(self, tmp_path):
        rc = main(["quantum", "--preset", "fig2", "--n-atoms", "60",
                   "--time-points", "3", "--evolution-ms", "10",
                   "--dt-fraction", "500", "--out", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "quantum.csv").exists()

    def test_lyapunov_map_command(self, tmp_path):
        rc = main(["lyapunov-map", "--preset", "fig1d-a0", "--periods", "20",
                   "--grid-nz", "3", "--grid-nphi", "3", "--out", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "lyapunov_map.csv").exists()


class TestScenarios:
    def test_series_scenario_artifacts(self, tmp_path):
        config = ScenarioConfig(scenario="fig2-elliptic", out_dir=str(tmp_path),
                                n_samples=300, time_points=4)
        manifest = run_scenario(config)
        assert os.path.exists(manifest)
        text = open(manifest).read()
        assert "t0_frac: 0.6" in text
        assert "sha256:" in text
        assert (tmp_path / "fig2-elliptic.csv").exists()
        assert (tmp_path / "fig2-elliptic.svg").exists()

    def test_undriven_variant_zeroes_drive(self, tmp_path):
        config = ScenarioConfig(scenario="fig3-undriven", out_dir=str(tmp_path),
                                n_samples=200, time_points=3)
        manifest = run_scenario(config)
        assert "drive_amp: 0" in open(manifest).read()

    def test_scenario_names_registered(self):
        assert set(SCENARIOS) >= {"fig1d", "fig2-hyperbolic", "fig2-elliptic",
                                  "fig3-chaotic", "fig3-island", "fig4a", "fig4b"}

    def test_rerun_byte_identical(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        for out in (a, b):
            run_scenario(ScenarioConfig(scenario="fig2-hyperbolic",
                                        out_dir=str(out), n_samples=250,
                                        time_points=4, seed=77))
        da = digest_file(str(a / "fig2-hyperbolic.csv"))
        db = digest_file(str(b / "fig2-hyperbolic.csv"))
        assert da == db

    def test_effective_start_variant(self, tmp_path):
        config = ScenarioConfig(scenario="fig3-island", out_dir=str(tmp_path),
                                n_samples=200, time_points=3, start="effective")
        manifest = run_scenario(config)
        text = open(manifest).read()
        assert "center_z: -0.29999999999999999" in text or "center_z: -0.3" in text
