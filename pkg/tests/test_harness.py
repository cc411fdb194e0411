import json

import numpy as np
import pytest

from cocosim.cli import main
from cocosim.config import (
    ConfigValidationError,
    ExperimentSpec,
    load_schema,
    validate_config,
)
from cocosim.core import ConfigError, ModelParams
from cocosim.experiments import run_experiment


def issue_paths(exc):
    return [i.path for i in exc.issues]


class TestValidateConfig:
    def test_minimal_document(self):
        spec = validate_config({"experiment": "fig1"})
        assert spec.id == "fig1"
        assert spec.params == ModelParams()

    def test_range_error_path(self):
        with pytest.raises(ConfigValidationError) as exc:
            validate_config({"experiment": "fig1", "params": {"f": 1.3}})
        assert "$.params.f" in issue_paths(exc.value)

    def test_cost_bound_ordering(self):
        with pytest.raises(ConfigValidationError) as exc:
            validate_config({"experiment": "fig1",
                             "params": {"c_min": 0.5, "c_max": 0.3}})
        assert "$.params.c_min" in issue_paths(exc.value)

    def test_collects_all_violations(self):
        with pytest.raises(ConfigValidationError) as exc:
            validate_config({"experiment": "fig1",
                             "params": {"f": 1.3, "n_agents": 1},
                             "overrides": {"gammas": [0.1]}})
        paths = issue_paths(exc.value)
        assert "$.params.f" in paths
        assert "$.params.n_agents" in paths
        assert any(p.startswith("$.overrides") for p in paths)

    def test_fig6_gamma_sweep_accepted(self):
        gammas = [round(g, 2) for g in np.arange(0.02, 0.5001, 0.02)]
        spec = validate_config({"experiment": "fig6",
                                "overrides": {"gammas": gammas}})
        assert spec.overrides["gammas"] == gammas

    def test_zero_measurement_window_rejected(self):
        with pytest.raises(ConfigValidationError) as exc:
            validate_config({"experiment": "custom",
                             "overrides": {"total_steps": 100,
                                           "burn_in_steps": 100}})
        assert "$.overrides.burn_in_steps" in issue_paths(exc.value)

    def test_unknown_experiment(self):
        with pytest.raises(ConfigValidationError):
            validate_config({"experiment": "fig99"})

    def test_scenario_cross_checks(self):
        with pytest.raises(ConfigValidationError) as exc:
            validate_config({"experiment": "custom",
                             "overrides": {"scenario": {"kind": "two_point",
                                                        "c_a": 0.35}}})
        assert "$.overrides.scenario" in issue_paths(exc.value)

    def test_schema_is_valid_jsonschema(self):
        import jsonschema
        jsonschema.Draft202012Validator.check_schema(load_schema())

    def test_config_hash_ignores_output_dir(self):
        a = validate_config({"experiment": "fig1", "output_dir": "x"})
        b = validate_config({"experiment": "fig1", "output_dir": "y"})
        assert a.config_hash() == b.config_hash()
        c = validate_config({"experiment": "fig1", "params": {"master_seed": 5}})
        assert c.config_hash() != a.config_hash()


def tiny_custom_spec(tmp_path, seed=7):
    return validate_config({
        "experiment": "custom",
        "params": {"master_seed": seed},
        "overrides": {"total_steps": 400, "burn_in_steps": 100},
        "output_dir": str(tmp_path / "out"),
    })


class TestRunExperiment:
    def test_custom_bundle(self, tmp_path):
        bundle = run_experiment(tiny_custom_spec(tmp_path), plots=False)
        assert set(bundle.csv_paths) == {"trajectory", "summary"}
        traj = bundle.csv_paths["trajectory"].read_bytes().split(b"\r\n")
        assert traj[0] == b"step,epsilon,mean_strategy,event_type,reward"
        assert len(traj) == 402  # header + 400 rows + trailing CRLF
        manifest = json.loads(bundle.manifest_path.read_text())
        assert manifest["config_hash"] == bundle.spec.config_hash()
        assert manifest["master_seed"] == 7
        assert "numpy" in manifest["versions"]

    def test_byte_identical_rerun(self, tmp_path):
        spec_a = tiny_custom_spec(tmp_path / "a")
        spec_b = tiny_custom_spec(tmp_path / "b")
        ba = run_experiment(spec_a, plots=False)
        bb = run_experiment(spec_b, plots=False)
        for name in ba.csv_paths:
            assert ba.csv_paths[name].read_bytes() == bb.csv_paths[name].read_bytes()

    def test_unknown_id(self, tmp_path):
        spec = tiny_custom_spec(tmp_path)
        spec.id = "figX"
        with pytest.raises(ConfigError):
            run_experiment(spec, plots=False)

    def test_fig1_tiny_with_plot(self, tmp_path):
        spec = validate_config({
            "experiment": "fig1",
            "overrides": {"c_grid": [0.36, 0.44], "replicates": 2,
                          "total_steps": 3000, "burn_in_steps": 1000},
            "output_dir": str(tmp_path),
        })
        bundle = run_experiment(spec, workers=1, plots=True)
        data = bundle.csv_paths["fig1_fixed_points"].read_bytes().split(b"\r\n")
        assert data[0] == (b"c,mean_eps_IM,mean_eps_AM1,mean_eps_AM2,"
                           b"eps_star_original,eps_star_adjusted")
        assert len(data) == 4
        assert len(bundle.plot_paths) == 1
        assert bundle.plot_paths[0].suffix == ".svg"
        assert bundle.plot_paths[0].stat().st_size > 0

    def test_fig2_tiny_headers(self, tmp_path):
        spec = validate_config({
            "experiment": "fig2",
            "overrides": {"replicates": 2, "total_steps": 6000,
                          "burn_in_steps": 1000, "export_matrix": True},
            "output_dir": str(tmp_path),
        })
        bundle = run_experiment(spec, workers=1, plots=False)
        dist = bundle.csv_paths["fig2_distribution"].read_bytes().split(b"\r\n")
        assert dist[0] == b"e,empirical_frequency,stationary_probability"
        assert len(dist) == 103  # header + 101 states + trailing CRLF
        assert "fig2_matrix" in bundle.csv_paths

    def test_fig6_tiny(self, tmp_path):
        spec = validate_config({
            "experiment": "fig6",
            "overrides": {"gammas": [0.1, 0.3], "total_steps": 2000},
            "output_dir": str(tmp_path),
        })
        bundle = run_experiment(spec, workers=1, plots=False)
        rows = bundle.csv_paths["fig6_equilibrium_selection"].read_text().splitlines()
        assert rows[0] == ("gamma,eps_final,c_final,eps_lower,c_lower,"
                           "eps_upper,c_upper")
        assert len(rows) == 3
        # no interior equilibria at gamma=0.3: branch cells stay empty
        assert rows[2].endswith(",,,,")

    def test_fig9_tiny_grid(self, tmp_path):
        spec = validate_config({
            "experiment": "fig9",
            "overrides": {"gammas": [0.2], "eps0_grid": [0.1, 0.9],
                          "c0_grid": [0.35], "runs": 1, "steps": 300},
            "output_dir": str(tmp_path),
        })
        bundle = run_experiment(spec, workers=1, plots=False)
        rows = bundle.csv_paths["fig9_phase_gamma0p2"].read_text().splitlines()
        assert rows[0] == "eps0,c0,eps_final_mean,c_final_mean,n_runs"
        assert len(rows) == 3

    @pytest.mark.parametrize("doc,names,rows_expected", [
        ({"experiment": "fig3",
          "overrides": {"replicates": 1, "total_steps": 7000,
                        "burn_in_steps": 1000}},
         ["fig3_uniform_distribution", "fig3_two_point_distribution",
          "fig3_summary"], {"fig3_summary": 2}),
        ({"experiment": "fig4",
          "overrides": {"replicates": 1, "total_steps": 7000,
                        "burn_in_steps": 1000}},
         ["fig4_linear_decreasing_distribution", "fig4_gamma_dist_distribution",
          "fig4_summary"], {"fig4_summary": 2}),
        ({"experiment": "fig5",
          "overrides": {"gammas": [0.1], "eps_fix_grid": [0.3, 0.7],
                        "total_steps": 2000}},
         ["fig5_nullcline_probe"], {"fig5_nullcline_probe": 2}),
        ({"experiment": "fig7",
          "overrides": {"deltas": [0.0, 0.005], "replicates": 1,
                        "total_steps": 2000, "record_every": 500}},
         ["fig7_low_start_curves"], {"fig7_low_start_curves": 4}),
        ({"experiment": "fig8",
          "overrides": {"n_agents_list": [20], "replicates": 1}},
         ["fig8_rescaled_curves"], {"fig8_rescaled_curves": 2000}),
        ({"experiment": "fig10",
          "overrides": {"eps0_grid": [0.1], "c0_grid": [0.31, 0.325],
                        "runs": 1, "steps": 300}},
         ["fig10_saddle_closeup"], {"fig10_saddle_closeup": 2}),
    ])
    def test_preset_smoke(self, tmp_path, doc, names, rows_expected):
        spec = validate_config(doc | {"output_dir": str(tmp_path)})
        bundle = run_experiment(spec, workers=1, plots=False)
        assert set(bundle.csv_paths) == set(names)
        for name, n_rows in rows_expected.items():
            lines = bundle.csv_paths[name].read_text().splitlines()
            assert len(lines) == n_rows + 1


class TestCli:
    def test_invalid_config_exit_2(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"experiment": "fig1", "params": {"f": 1.3}}))
        assert main(["--config", str(cfg), "figure", "fig1"]) == 2
        assert "$.params.f" in capsys.readouterr().err

    def test_unknown_figure_exit_2(self, tmp_path, capsys):
        assert main(["--out", str(tmp_path), "figure", "fig99"]) == 2

    def test_mismatched_config_exit_2(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"experiment": "fig2"}))
        assert main(["--config", str(cfg), "figure", "fig1"]) == 2

    def test_numerics_exit_3(self, tmp_path, capsys):
        cfg = tmp_path / "ode.json"
        cfg.write_text(json.dumps({
            "experiment": "custom",
            "overrides": {"variant": "adjusted_eps", "init": [0.0, 0.0]},
            "output_dir": str(tmp_path / "o"),
        }))
        assert main(["--config", str(cfg), "--no-plots", "ode"]) == 3

    def test_io_error_exit_4(self, tmp_path, capsys):
        blocker = tmp_path / "blocker"
        blocker.write_text("file, not a directory")
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({
            "experiment": "custom",
            "overrides": {"total_steps": 50, "burn_in_steps": 10},
            "output_dir": str(blocker / "sub"),
        }))
        assert main(["--config", str(cfg), "--no-plots", "simulate"]) == 4

    def test_simulate_smoke_exit_0(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({
            "experiment": "custom",
            "overrides": {"total_steps": 200, "burn_in_steps": 50},
            "output_dir": str(tmp_path / "out"),
        }))
        assert main(["--config", str(cfg), "--no-plots", "--seed", "11",
                     "simulate"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert (tmp_path / "out" / "manifest.json").exists()
        assert json.loads((tmp_path / "out" / "manifest.json").read_text())[
            "master_seed"] == 11
        assert payload["experiment"] == "custom"

    def test_seed_flag_changes_outputs(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({
            "experiment": "custom",
            "overrides": {"total_steps": 200, "burn_in_steps": 50},
            "output_dir": str(tmp_path / "s1"),
        }))
        main(["--config", str(cfg), "--no-plots", "--seed", "1", "simulate"])
        main(["--config", str(cfg), "--no-plots", "--seed", "2", "--out",
              str(tmp_path / "s2"), "simulate"])
        a = (tmp_path / "s1" / "trajectory.csv").read_bytes()
        b = (tmp_path / "s2" / "trajectory.csv").read_bytes()
        assert a != b

    def test_equilibria_and_chain_smoke(self, tmp_path):
        assert main(["--out", str(tmp_path / "eq"), "--no-plots",
                     "equilibria"]) == 0
        assert (tmp_path / "eq" / "bifurcation.csv").exists()
        assert main(["--out", str(tmp_path / "ch"), "--no-plots", "chain"]) == 0
        rows = (tmp_path / "ch" / "stationary.csv").read_text().splitlines()
        assert rows[0] == "e,probability"
