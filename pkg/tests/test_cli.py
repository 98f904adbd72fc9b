import json

import pytest

from dequelab.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestAnalytic:
    def test_json_payload(self, capsys):
        code, out, _ = run_cli(
            capsys, "analytic", "--alpha", "1", "--beta", "1.5", "--theta", "0.1", "--gamma", "0.15"
        )
        assert code == 0
        data = json.loads(out)
        assert data["L1_p"] == pytest.approx(-3.2532, abs=5e-4)
        assert data["L2_p"] == pytest.approx(21.2498, abs=5e-4)
        assert data["pi0"] == pytest.approx(1.0 / (1.0 + data["p1"] + data["p2"]))

    def test_numerical_error_exit_code(self, capsys):
        code, _, err = run_cli(
            capsys, "analytic", "--alpha", "1", "--beta", "2", "--theta", "1e-4", "--gamma", "2e-4"
        )
        assert code == 3
        assert "error" in err


class TestFluid:
    def test_closed_form_csv(self, capsys):
        code, out, _ = run_cli(
            capsys, "fluid", "--alpha", "2", "--beta", "1", "--theta", "1", "--gamma", "1",
            "--x0", "-1", "--horizon", "2", "--step", "0.01", "--closed-form",
        )
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == "t,x"
        assert len(lines) == 202
        first = lines[1].split(",")
        assert float(first[0]) == 0.0 and float(first[1]) == -1.0

    def test_integrate_agrees(self, capsys):
        args = ["--alpha", "1", "--beta", "1.5", "--theta", "0.2", "--gamma", "0.3",
                "--x0", "2", "--horizon", "5", "--step", "0.01"]
        _, closed, _ = run_cli(capsys, "fluid", *args, "--closed-form")
        _, integ, _ = run_cli(capsys, "fluid", *args, "--integrate")
        for a, b in zip(closed.strip().split("\n")[1:], integ.strip().split("\n")[1:]):
            xa = float(a.split(",")[1])
            xb = float(b.split(",")[1])
            assert xa == pytest.approx(xb, abs=1e-6)


class TestDiffusion:
    def test_model1(self, capsys):
        code, out, _ = run_cli(
            capsys, "diffusion", "model1", "--alpha", "1", "--beta", "2",
            "--theta", "0.01", "--gamma", "0.02", "--dist", "exp",
        )
        assert code == 0
        data = json.loads(out)
        assert data["L2_d1"] == pytest.approx(2625.0, abs=5e-4)

    def test_model2(self, capsys):
        code, out, _ = run_cli(
            capsys, "diffusion", "model2", "--alpha", "1", "--beta", "1.5",
            "--theta", "0.1", "--gamma", "0.15", "--dist", "exp",
        )
        data = json.loads(out)
        assert data["L1_d2"] == pytest.approx(-3.3333, abs=5e-5)
        assert data["L2_d2"] == pytest.approx(27.0518, abs=5e-4)

    def test_sigma_override(self, capsys):
        # explicit sds beat the family's nominal values
        _, out, _ = run_cli(
            capsys, "diffusion", "model1", "--alpha", "1", "--beta", "1",
            "--theta", "1", "--gamma", "1", "--sigma", "1", "--varsigma", "1",
        )
        assert json.loads(out)["L2_d1"] == pytest.approx(1.0, rel=1e-12)

    def test_density_grid(self, capsys):
        code, out, _ = run_cli(
            capsys, "diffusion", "density", "--alpha", "1", "--beta", "1",
            "--theta", "1", "--gamma", "1", "--dist", "exp", "--grid=-3:3:61",
        )
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == "x,psi"
        assert len(lines) == 62
        mid = lines[31].split(",")
        assert float(mid[0]) == pytest.approx(0.0, abs=1e-12)
        assert float(mid[1]) == pytest.approx(0.3989423, abs=1e-6)

    def test_bad_grid_exit_code(self, capsys):
        code, _, err = run_cli(
            capsys, "diffusion", "density", "--alpha", "1", "--beta", "1",
            "--theta", "1", "--gamma", "1", "--grid", "oops",
        )
        assert code == 2
        assert "error" in err


class TestSimulate:
    def test_json_estimate(self, capsys):
        code, out, _ = run_cli(
            capsys, "simulate", "--dist", "exp", "--alpha", "1", "--beta", "1",
            "--theta", "1", "--gamma", "1", "--reps", "3", "--horizon", "120",
            "--warmup", "20", "--seed", "42",
        )
        assert code == 0
        data = json.loads(out)
        assert data["replication_count"] == 3
        assert data["seed"] == 42
        total = sum(data["pmf"].values())
        assert total == pytest.approx(1.0, abs=1e-9)
        assert abs(data["L1_s"]) < 1.0

    def test_deterministic(self, capsys):
        args = ["simulate", "--dist", "uniform", "--alpha", "1", "--beta", "1.5",
                "--theta", "0.5", "--gamma", "0.75", "--reps", "2", "--horizon", "80",
                "--warmup", "10", "--seed", "7"]
        _, out1, _ = run_cli(capsys, *args)
        _, out2, _ = run_cli(capsys, *args)
        assert out1 == out2


class TestCompare:
    def test_end_to_end(self, capsys, tmp_path):
        config = {
            "families": ["exp"],
            "rate_pairs": [[1.0, 1.5]],
            "reneging_multipliers": [1.0],
            "budget": {"replications": 2, "warmup": 10.0, "horizon": 50.0},
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config))
        out_dir = tmp_path / "out"
        code, out, _ = run_cli(
            capsys, "compare", "--config", str(cfg_path), "--seed", "3", "--out", str(out_dir)
        )
        assert code == 0
        assert (out_dir / "comparison.csv").exists()
        assert (out_dir / "comparison.json").exists()
        header = (out_dir / "comparison.csv").read_text().splitlines()[0]
        assert header.split(",")[:7] == ["dist", "alpha", "beta", "theta", "gamma", "L1_s", "L1_s_ci"]

    def test_config_error_exit_code(self, capsys, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"families": ["weibull"]}))
        code, _, err = run_cli(
            capsys, "compare", "--config", str(cfg_path), "--seed", "1", "--out", str(tmp_path / "o")
        )
        assert code == 2
        assert "valid names" in err

    def test_missing_config_file(self, capsys, tmp_path):
        code, _, _ = run_cli(
            capsys, "compare", "--config", str(tmp_path / "nope.json"), "--seed", "1",
            "--out", str(tmp_path / "o"),
        )
        assert code == 2
