"""End-to-end tests of the batch experiment driver."""

import json
import math

import numpy as np
import pytest
from conftest import F_Z0_D, J_STAR_D, Z_STAR_D

from distlq.cli import (ConfigError, main, parse_config, serialize_config)
from distlq.cost import f_of_z


def write_config(tmp_path, payload, name="config.json") -> str:
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def base_learner(**overrides) -> dict:
    block = {"eta": 5e-4, "r": 0.1, "T": 1, "seeds": [0],
             "z0": [0.5, -0.25, 0.75]}
    block.update(overrides)
    return block


class TestConfigParsing:
    def test_parse_serialize_round_trip(self):
        raw = {"fixture": "appendix-d",
               "learner": base_learner(),
               "output": {"directory": "out", "csv_stride": 2}}
        cfg = parse_config(raw)
        again = parse_config(json.loads(serialize_config(cfg)))
        assert again.config_hash == cfg.config_hash
        assert again.resolved == cfg.resolved
        assert again.csv_stride == 2

    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(ConfigError, match="mystery"):
            parse_config({"fixture": "b2", "mystery": 1})

    def test_unknown_nested_key_rejected(self):
        with pytest.raises(ConfigError, match="learner"):
            parse_config({"fixture": "b2",
                          "learner": base_learner(warmup=3)})
        with pytest.raises(ConfigError, match="output"):
            parse_config({"fixture": "b2", "output": {"compress": True}})

    def test_fixture_conflicts_with_explicit_blocks(self):
        with pytest.raises(ConfigError, match="conflicts"):
            parse_config({"fixture": "b2",
                          "noise": {"delta0_halfwidth": 1.0,
                                    "w_halfwidth": 1.0, "v_halfwidth": 1.0}})

    def test_explicit_blocks_all_required_without_fixture(self):
        with pytest.raises(ConfigError, match="system"):
            parse_config({"learner": base_learner()})

    def test_learner_start_is_exclusive_or(self):
        with pytest.raises(ConfigError, match="z0"):
            parse_config({"fixture": "b2",
                          "learner": base_learner(oracle_minus=[1, 1, 1])})
        with pytest.raises(ConfigError, match="z0"):
            block = base_learner()
            del block["z0"]
            parse_config({"fixture": "b2", "learner": block})

    def test_sweep_epsilons_must_descend(self):
        with pytest.raises(ConfigError, match="descending"):
            parse_config({"fixture": "appendix-d",
                          "learner": base_learner(),
                          "sweep": {"epsilons": [0.1, 0.2], "runs": 2}})

    def test_output_validation(self):
        with pytest.raises(ConfigError, match="format"):
            parse_config({"fixture": "b2", "output": {"formats": ["yaml"]}})
        with pytest.raises(ConfigError, match="csv_stride"):
            parse_config({"fixture": "b2", "output": {"csv_stride": 0}})

    def test_unknown_fixture_name(self):
        with pytest.raises(ConfigError, match="known"):
            parse_config({"fixture": "nonesuch"})

    def test_malformed_json_reports_position(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text('{"fixture": "b2",,}')
        code = main(["qi-check", "--config", str(path)])
        assert code == 2
        err = capsys.readouterr().err
        assert "line 1" in err and "column" in err

    def test_missing_config_file(self, tmp_path, capsys):
        code = main(["qi-check", "--config", str(tmp_path / "absent.json")])
        assert code == 2
        assert "cannot read" in capsys.readouterr().err

    def test_custom_system_blocks(self, tmp_path, capsys):
        payload = {
            "system": {"N": 2, "n": 1, "m": 1, "p": 1,
                       "A": [[1.0]], "B": [[1.0]], "C": [[1.0]],
                       "M": [[0.0]], "R": [[1.0]], "mu0": [0.0]},
            "pattern": {"causal": True},
            "noise": {"delta0_halfwidth": 1.7320508075688772,
                      "w_halfwidth": 1.7320508075688772,
                      "v_halfwidth": 1.7320508075688772},
        }
        code = main(["qi-check", "--config", write_config(tmp_path, payload)])
        assert code == 0
        assert "QI: true, d=3" in capsys.readouterr().out


class TestQiCheck:
    def test_benchmark_is_qi(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"fixture": "appendix-d"})
        assert main(["qi-check", "--config", cfg]) == 0
        assert "QI: true, d=3" in capsys.readouterr().out

    def test_tied_diagonal_is_not_qi(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"fixture": "b3"})
        assert main(["qi-check", "--config", cfg]) == 3
        out = capsys.readouterr().out
        assert "QI: false" in out
        assert "witness" in out


class TestSolve:
    def test_benchmark_solution_json(self, tmp_path, capsys):
        out_dir = tmp_path / "out"
        cfg = write_config(tmp_path, {"fixture": "appendix-d"})
        assert main(["solve", "--config", cfg, "--out", str(out_dir)]) == 0
        shown = capsys.readouterr().out
        assert shown.startswith("J_star = ")
        assert float(shown.split("=")[1]) == pytest.approx(0.5918, abs=1e-2)
        payload = json.loads((out_dir / "solution.json").read_text())
        assert payload["method"] == "qi-oracle"
        assert payload["J_star"] == pytest.approx(J_STAR_D, rel=1e-9)
        assert payload["J_star"] == pytest.approx(0.5918, abs=1e-2)
        np.testing.assert_allclose(payload["z_star"], Z_STAR_D, atol=1e-9)
        assert payload["mu"] > 0
        assert len(payload["config_hash"]) == 64

    def test_zero_cost_chain(self, tmp_path):
        out_dir = tmp_path / "out"
        cfg = write_config(tmp_path, {"fixture": "b2"})
        assert main(["solve", "--config", cfg, "--out", str(out_dir)]) == 0
        payload = json.loads((out_dir / "solution.json").read_text())
        assert payload["J_star"] == pytest.approx(0.0, abs=1e-9)

    def test_non_qi_fixture_points_at_direct_flag(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"fixture": "b3"})
        assert main(["solve", "--config", cfg, "--out",
                     str(tmp_path / "out")]) == 3
        assert "--direct" in capsys.readouterr().err

    def test_direct_newton_on_non_qi_fixture(self, tmp_path):
        out_dir = tmp_path / "out"
        cfg = write_config(tmp_path, {"fixture": "b3"})
        assert main(["solve", "--config", cfg, "--out", str(out_dir),
                     "--direct"]) == 0
        payload = json.loads((out_dir / "solution.json").read_text())
        assert payload["method"] == "newton"
        assert payload["grad_norm"] <= 1e-8


class TestLearn:
    def test_zero_step_run_writes_csv_and_summary(self, tmp_path, ctx_d):
        out_dir = tmp_path / "out"
        z0 = [0.5, -0.25, 0.75]
        payload = {"fixture": "appendix-d",
                   "learner": base_learner(eta=0.0, T=1, seeds=[0, 1], z0=z0)}
        cfg = write_config(tmp_path, payload)
        assert main(["learn", "--config", cfg, "--out", str(out_dir)]) == 0

        summary = json.loads((out_dir / "summary.json").read_text())
        f0 = f_of_z(ctx_d, np.array(z0))
        assert summary["J_star"] == pytest.approx(J_STAR_D, rel=1e-9)
        assert [run["seed"] for run in summary["runs"]] == [0, 1]
        for run in summary["runs"]:
            assert run["iterations"] == 1
            assert run["final_f"] == pytest.approx(f0, rel=1e-12)
            assert run["final_gap"] == pytest.approx(f0 - J_STAR_D, rel=1e-9)
            assert not run["diverged"]

        for seed in (0, 1):
            lines = (out_dir / f"run_{seed}.csv").read_text().splitlines()
            assert lines[0].startswith("# config_hash=")
            assert lines[0].endswith(f"seed={seed}")
            assert summary["config_hash"] in lines[0]
            assert lines[1] == "iter,f_hat,z_norm"
            assert len(lines) == 3

    def test_two_invocations_produce_identical_csv_bytes(self, tmp_path):
        payload = {"fixture": "appendix-d",
                   "learner": base_learner(T=40, seeds=[3],
                                           log_true_cost_every=10)}
        cfg = write_config(tmp_path, payload)
        dirs = [tmp_path / "a", tmp_path / "b"]
        for d in dirs:
            assert main(["learn", "--config", cfg, "--out", str(d)]) == 0
        first = (dirs[0] / "run_3.csv").read_bytes()
        second = (dirs[1] / "run_3.csv").read_bytes()
        assert first == second
        assert b"f_true" in first

    def test_csv_stride_thins_rows(self, tmp_path):
        payload = {"fixture": "appendix-d",
                   "learner": base_learner(T=25, seeds=[0]),
                   "output": {"csv_stride": 10}}
        cfg = write_config(tmp_path, payload)
        out_dir = tmp_path / "out"
        assert main(["learn", "--config", cfg, "--out", str(out_dir)]) == 0
        lines = (out_dir / "run_0.csv").read_text().splitlines()
        assert [row.split(",")[0] for row in lines[2:]] == ["0", "10", "20"]

    def test_oracle_offset_start(self, tmp_path):
        payload = {"fixture": "appendix-d",
                   "learner": base_learner(z0=None, T=1, eta=0.0)}
        del payload["learner"]["z0"]
        payload["learner"]["oracle_minus"] = [1.0, 1.0, 1.0]
        cfg = write_config(tmp_path, payload)
        out_dir = tmp_path / "out"
        assert main(["learn", "--config", cfg, "--out", str(out_dir)]) == 0
        summary = json.loads((out_dir / "summary.json").read_text())
        np.testing.assert_allclose(summary["z0"], np.array(Z_STAR_D) - 1.0,
                                   atol=1e-9)
        assert summary["runs"][0]["final_gap"] == pytest.approx(
            F_Z0_D - J_STAR_D, rel=1e-9)

    def test_missing_learner_block(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"fixture": "appendix-d"})
        assert main(["learn", "--config", cfg, "--out",
                     str(tmp_path / "out")]) == 2
        assert "learner" in capsys.readouterr().err

    def test_divergence_is_nonfatal_unless_strict(self, tmp_path, capsys):
        payload = {"fixture": "appendix-d",
                   "learner": base_learner(eta=1e8, T=50, seeds=[0])}
        cfg = write_config(tmp_path, payload)
        with np.errstate(over="ignore", invalid="ignore"):
            assert main(["learn", "--config", cfg, "--out",
                         str(tmp_path / "a")]) == 0
            summary = json.loads((tmp_path / "a" / "summary.json").read_text())
            assert summary["runs"][0]["diverged"]
            assert "error" in summary["runs"][0]
            capsys.readouterr()
            assert main(["learn", "--config", cfg, "--out",
                         str(tmp_path / "b"), "--strict"]) == 1
            assert "diverged" in capsys.readouterr().err


class TestSweep:
    def test_two_level_sweep_schema_and_monotonicity(self, tmp_path):
        payload = {
            "fixture": "appendix-d",
            "learner": {"eta": 5e-4, "r": 0.1, "T": 1,
                        "seeds": [0], "oracle_minus": [1.0, 1.0, 1.0]},
            "sweep": {"epsilons": [0.2, 0.15], "runs": 2, "delta": 0.5,
                      "check_every": 10, "max_iters": 30000,
                      "constants_samples": 40, "constants_seed": 0,
                      "rho0": 1.0},
        }
        cfg = write_config(tmp_path, payload)
        out_dir = tmp_path / "out"
        assert main(["sweep", "--config", cfg, "--out", str(out_dir)]) == 0
        lines = (out_dir / "sweep.csv").read_text().splitlines()
        assert lines[0].startswith("# config_hash=")
        assert lines[0].endswith("seeds=0-1")
        assert lines[1] == ("epsilon,mean_steps,min_steps,max_steps,"
                            "successes,runs,theoretical_T")
        rows = [line.split(",") for line in lines[2:]]
        assert [float(r[0]) for r in rows] == [0.2, 0.15]
        means = [float(r[1]) for r in rows]
        assert all(m > 0 for m in means)
        assert means[1] >= means[0]
        for r in rows:
            successes, runs, theo = int(r[4]), int(r[5]), int(r[6])
            assert successes == runs == 2
            assert float(r[1]) <= theo
            assert float(r[2]) <= float(r[1]) <= float(r[3])

    def test_target_met_at_start_records_zero_steps(self, tmp_path, ctx_d,
                                                    sol_d):
        z0 = np.array(Z_STAR_D) - 1.0
        gap0 = f_of_z(ctx_d, z0) - sol_d.J_star
        payload = {
            "fixture": "appendix-d",
            "learner": {"eta": 5e-4, "r": 0.1, "T": 1,
                        "seeds": [0], "oracle_minus": [1.0, 1.0, 1.0]},
            "sweep": {"epsilons": [round(gap0 + 0.005, 4)], "runs": 3,
                      "constants_samples": 40, "max_iters": 100},
        }
        cfg = write_config(tmp_path, payload)
        out_dir = tmp_path / "out"
        assert main(["sweep", "--config", cfg, "--out", str(out_dir)]) == 0
        lines = (out_dir / "sweep.csv").read_text().splitlines()
        row = lines[2].split(",")
        assert float(row[1]) == 0.0
        assert int(row[4]) == 3

    def test_sweep_requires_learner_block(self, tmp_path, capsys):
        payload = {"fixture": "appendix-d",
                   "sweep": {"epsilons": [0.2], "runs": 1}}
        cfg = write_config(tmp_path, payload)
        assert main(["sweep", "--config", cfg, "--out",
                     str(tmp_path / "out")]) == 2
        assert "learner" in capsys.readouterr().err


class TestProbe:
    def test_scalar_chain_constants(self, tmp_path, capsys):
        payload = {"fixture": "b2",
                   "probe": {"delta": 0.5, "epsilon": 0.1, "n_samples": 40,
                             "seed": 0}}
        cfg = write_config(tmp_path, payload)
        out_dir = tmp_path / "out"
        assert main(["probe", "--config", cfg, "--out", str(out_dir)]) == 0
        payload = json.loads((out_dir / "constants.json").read_text())
        assert payload["mu"] == pytest.approx(5.0 - math.sqrt(5.0), abs=1e-6)
        assert payload["tau"] >= 3.0
        assert payload["mu_delta"] == pytest.approx(
            2.0 * payload["mu"] / payload["tau"], rel=1e-12)
        assert payload["D"] == pytest.approx(9.0, rel=1e-9)
        shown = json.loads(capsys.readouterr().out)
        assert shown["mu"] == payload["mu"]

    def test_benchmark_schedule_fields_positive(self, tmp_path):
        payload = {"fixture": "appendix-d",
                   "probe": {"delta": 0.5, "epsilon": 0.1, "n_samples": 40,
                             "seed": 0, "gap0": 0.3033}}
        cfg = write_config(tmp_path, payload)
        out_dir = tmp_path / "out"
        assert main(["probe", "--config", cfg, "--out", str(out_dir)]) == 0
        payload = json.loads((out_dir / "constants.json").read_text())
        assert payload["D"] == pytest.approx(918.0, rel=1e-6)
        sched = payload["schedule"]
        for key in ("eta", "r", "T", "theta_delta"):
            assert sched[key] > 0
        assert math.isfinite(sched["eta"]) and math.isfinite(sched["r"])
        assert sched["success_probability"] == pytest.approx(0.5)

    def test_direct_probe_on_non_qi_fixture(self, tmp_path):
        payload = {"fixture": "b3",
                   "probe": {"delta": 0.5, "epsilon": 0.1, "n_samples": 30,
                             "seed": 0}}
        cfg = write_config(tmp_path, payload)
        out_dir = tmp_path / "out"
        assert main(["probe", "--config", cfg, "--out", str(out_dir),
                     "--direct"]) == 0
        payload = json.loads((out_dir / "constants.json").read_text())
        assert payload["method"] == "direct"
        assert payload["tau"] is None
        assert payload["mu"] > 0
        assert payload["mu_delta"] == pytest.approx(2.0 * payload["mu"],
                                                    rel=1e-12)

    def test_zero_halfwidth_noise_is_config_error(self, tmp_path, capsys):
        payload = {
            "system": {"N": 1, "n": 1, "m": 1, "p": 1,
                       "A": [[1.0]], "B": [[1.0]], "C": [[1.0]],
                       "M": [[1.0]], "R": [[1.0]], "mu0": [0.5]},
            "pattern": {"causal": True},
            "noise": {"delta0_halfwidth": 0.5, "w_halfwidth": 0.5,
                      "v_halfwidth": 0.0},
        }
        cfg = write_config(tmp_path, payload)
        assert main(["probe", "--config", cfg, "--out",
                     str(tmp_path / "out")]) == 2
        assert "halfwidth" in capsys.readouterr().err
