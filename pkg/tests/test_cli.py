"""Tests for the ``genac`` command-line interface."""
import csv
import io
import json
import math

import numpy as np
import pytest

from genac import cli

TINY = ["--steps", "600", "--warmup", "200", "--hidden", "8,8", "--batch-size", "16",
        "--eval-interval", "200", "--eval-episodes", "1", "--k-samples", "3", "--quiet"]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def split_tables(text):
    """stdout of ``bounds``: two CSV blocks separated by a blank line."""
    first, second = text.strip("\n").split("\n\n")
    return (list(csv.DictReader(io.StringIO(first))),
            list(csv.DictReader(io.StringIO(second))))


class TestTrain:
    def test_row_count_at_default_interval(self, tmp_path):
        """30000 steps at the default interval gives 30 evaluation rows (learning off)."""
        out = tmp_path / "run"
        rc = cli.main(["train", "--algo", "tac", "--env", "pointmass2d", "--q", "2.0",
                       "--seed", "1", "--steps", "30000", "--warmup", "30000",
                       "--eval-episodes", "1", "--quiet", "--out", str(out)])
        assert rc == 0
        rows = read_csv(out / "curve.csv")
        assert len(rows) == 30
        assert [int(r["step"]) for r in rows] == list(range(1000, 30001, 1000))
        meta = json.loads((out / "metadata.json").read_text())
        assert meta["config"]["trainer"]["eval_interval"] == 1000
        assert (out / "snapshots" / "policy.json").exists()

    def test_q_one_needs_limit_flag(self, tmp_path, capsys):
        rc = cli.main(["train", "--algo", "tac", "--q", "1.0", "--out", str(tmp_path)])
        assert rc == cli.EXIT_CONFIG
        assert "error" in capsys.readouterr().err

    def test_q_one_with_limit_flag(self, tmp_path):
        rc = cli.main(["train", "--algo", "tac", "--q", "1.0", "--shannon-limit", *TINY,
                       "--out", str(tmp_path / "r")])
        assert rc == 0

    def test_rac_needs_eta_above_one(self, tmp_path):
        assert cli.main(["train", "--algo", "rac", "--eta", "0.5", *TINY,
                         "--out", str(tmp_path)]) == cli.EXIT_CONFIG

    def test_byte_identical(self, tmp_path):
        args = ["train", "--algo", "rac", "--eta", "2.0", "--seed", "4", *TINY]
        assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
        assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
        a = (tmp_path / "a" / "curve.csv").read_bytes()
        assert a == (tmp_path / "b" / "curve.csv").read_bytes()
        assert b"\r\n" not in a

    def test_replay_from_metadata(self, tmp_path):
        assert cli.main(["train", "--algo", "sac", "--seed", "3", *TINY,
                         "--out", str(tmp_path / "a")]) == 0
        assert cli.main(["train", "--config", str(tmp_path / "a" / "metadata.json"), "--quiet",
                         "--out", str(tmp_path / "b")]) == 0
        assert ((tmp_path / "a" / "curve.csv").read_bytes()
                == (tmp_path / "b" / "curve.csv").read_bytes())
        ma = json.loads((tmp_path / "a" / "metadata.json").read_text())
        mb = json.loads((tmp_path / "b" / "metadata.json").read_text())
        assert ma["config"] == mb["config"]

    def test_flags_override_config_file(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"algo": "tac", "index": 2.5, "trainer": {"alpha": 0.3}}))
        assert cli.main(["train", "--config", str(cfg), "--alpha", "0.1", *TINY,
                         "--out", str(tmp_path / "r")]) == 0
        meta = json.loads((tmp_path / "r" / "metadata.json").read_text())
        assert meta["config"]["index"] == 2.5
        assert meta["config"]["trainer"]["alpha"] == 0.1

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"algo": "tac", "colour": "red"}))
        assert cli.main(["train", "--config", str(cfg), "--out", str(tmp_path)]) == cli.EXIT_CONFIG

    def test_output_root_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path))
        assert cli.main(["train", "--algo", "sac", "--seed", "0", *TINY]) == 0
        assert (tmp_path / "sac-pointmass2d-s0" / "curve.csv").exists()

    def test_ensemble_and_eval(self, tmp_path, capsys):
        out = tmp_path / "e"
        assert cli.main(["train", "--algo", "eac-tac", "--ensemble-size", "2", *TINY,
                         "--out", str(out)]) == 0
        capsys.readouterr()
        assert cli.main(["eval", str(out), "--episodes", "2"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "episodes,return_mean,return_std"
        assert math.isfinite(float(lines[1].split(",")[1]))


class TestSweep:
    def test_artifacts_and_summary(self, tmp_path):
        out = tmp_path / "sw"
        rc = cli.main(["sweep", "--algo", "tac", "--grid", "1.5,2.0,2.5", "--seeds", "0,1,2",
                       "--workers", "1", *TINY, "--out", str(out)])
        assert rc == 0
        curves = sorted(out.glob("*/curve.csv"))
        assert len(curves) == 9
        summary = read_csv(out / "summary.csv")
        assert [float(r["index"]) for r in summary] == [1.5, 2.0, 2.5]
        for row in summary:
            idx = float(row["index"])
            finals = [float(read_csv(out / f"index{idx:g}-seed{s}" / "curve.csv")[-1]
                            ["eval_return_mean"]) for s in range(3)]
            assert float(row["final_return_mean"]) == pytest.approx(np.mean(finals), rel=1e-12)
            assert int(row["n_seeds"]) == 3

    def test_empty_grid(self, tmp_path):
        assert cli.main(["sweep", "--algo", "tac", "--grid", "", "--seeds", "0",
                         "--out", str(tmp_path)]) == cli.EXIT_CONFIG

    def test_sac_rejected(self, tmp_path):
        assert cli.main(["sweep", "--algo", "sac", "--out", str(tmp_path)]) == cli.EXIT_CONFIG


class TestVerifyTabular:
    def test_default_passes(self, capsys):
        assert cli.main(["verify-tabular", "--seeds", "20"]) == 0
        out = capsys.readouterr().out
        for name in ("contraction", "monotone_improvement", "convergence", "softmax_equivalence"):
            assert f"PASS {name}" in out

    def test_fault_detected(self, capsys):
        assert cli.main(["verify-tabular", "--seeds", "5", "--inject-fault"]) == cli.EXIT_FAILED
        assert "FAIL" in capsys.readouterr().out


class TestBounds:
    def test_unit_grid(self, capsys):
        assert cli.main(["bounds"]) == 0
        tsallis, renyi = split_tables(capsys.readouterr().out)
        assert len(tsallis) == 21
        assert float(tsallis[0]["q"]) == 1.0 and float(tsallis[-1]["q"]) == pytest.approx(3.0)
        z = [float(r["zeta_tsallis"]) for r in tsallis]
        assert all(b <= a for a, b in zip(z, z[1:]))
        assert len({r["zeta_renyi"] for r in renyi}) == 1

    def test_alpha_zero(self, capsys):
        assert cli.main(["bounds", "--alpha", "0"]) == 0
        tsallis, renyi = split_tables(capsys.readouterr().out)
        assert all(float(r["zeta_tsallis"]) == 0.0 for r in tsallis)
        assert all(float(r["zeta_renyi"]) == 0.0 for r in renyi)

    def test_lower_bound_column(self, capsys):
        assert cli.main(["bounds", "--q-grid", "2.0:2.0:0.1", "--gamma", "0.5",
                         "--q-standard", "1.0"]) == 0
        tsallis, _ = split_tables(capsys.readouterr().out)
        row = tsallis[0]
        assert float(row["lower_bound"]) == pytest.approx(1.0 - float(row["zeta_tsallis"]))

    def test_files(self, tmp_path):
        assert cli.main(["bounds", "--out", str(tmp_path)]) == 0
        assert len(read_csv(tmp_path / "zeta_tsallis.csv")) == 21

    def test_invalid(self):
        assert cli.main(["bounds", "--xi-lo", "-1"]) == cli.EXIT_CONFIG


class TestMisc:
    def test_ensemble_mc(self, tmp_path):
        out = tmp_path / "mc.csv"
        assert cli.main(["ensemble-mc", "--L", "1,4", "--trials", "20000",
                         "--out", str(out)]) == 0
        rows = read_csv(out)
        assert [int(r["L"]) for r in rows] == [1, 4]
        assert {"L", "expected_Q", "gap"} <= set(rows[0])

    def test_ensemble_mc_too_few_trials(self):
        assert cli.main(["ensemble-mc", "--trials", "10"]) == cli.EXIT_CONFIG

    def test_list_envs(self, capsys):
        assert cli.main(["list-envs"]) == 0
        names = [r["name"] for r in csv.DictReader(io.StringIO(capsys.readouterr().out))]
        assert "pointmass2d" in names

    @pytest.mark.parametrize("argv", [["train", "--bogus"], ["bounds", "--nope", "1"],
                                      ["frobnicate"]])
    def test_unknown_flags_rejected(self, argv):
        with pytest.raises(SystemExit) as exc:
            cli.main(argv)
        assert exc.value.code == 2
