import json
import subprocess
import sys

import pytest

from nonconv.cli import main


def run_cli(args, tmp_path, name="out"):
    out = tmp_path / name
    code = main(list(args) + ["--out", str(out)])
    summary = None
    summary_path = out / "summary.json"
    if summary_path.exists():
        summary = json.loads(summary_path.read_text())
    return code, summary, out


class TestClassifyCommand:
    def test_equivalent_pair_verdict(self, tmp_path, capsys):
        code, summary, _ = run_cli(
            ["classify", "--p", "4n^2", "--q", "n^2", "--seed", "42"], tmp_path)
        assert code == 0
        v = summary["verdict"]
        assert v["kind"] == "q_equivalent"
        assert (v["c"], v["r"], v["d"]) == ("2", "0", "0")

    def test_byte_identical_reruns(self, tmp_path):
        _, _, out1 = run_cli(["classify", "--p", "4n^2", "--q", "n^2",
                              "--seed", "42"], tmp_path, "a")
        _, _, out2 = run_cli(["classify", "--p", "4n^2", "--q", "n^2",
                              "--seed", "42"], tmp_path, "b")
        assert (out1 / "summary.json").read_bytes() == (out2 / "summary.json").read_bytes()

    def test_family_diagnostics_mode(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"family": {"polys": ["n", "n+N"]}}))
        code, summary, _ = run_cli(
            ["classify", "--config", str(cfg), "--seed", "1"], tmp_path)
        assert code == 0 and summary["family_diagnostics"]["a1_ok"]


class TestStrictSchema:
    def test_unknown_key_named(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"experiment": {"replicatons": 5}}))
        code = main(["slln", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert code == 1
        assert "replicatons" in capsys.readouterr().err

    def test_malformed_json_position(self, tmp_path, capsys):
        cfg = tmp_path / "broken.json"
        cfg.write_text('{"experiment": {')
        code = main(["slln", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert code == 1
        err = capsys.readouterr().err
        assert "line" in err and "column" in err

    def test_toml_config(self, tmp_path):
        cfg = tmp_path / "cfg.toml"
        cfg.write_text(
            '[family]\npolys = ["n", "n+N"]\n'
            '[process]\nkind = "base_m"\nm = 2\n'
            '[experiment]\nN = 2000\nseed = 3\n')
        code, summary, _ = run_cli(["slln", "--config", str(cfg)], tmp_path)
        assert code == 0
        assert summary["config"]["N"] == 2000


class TestCommands:
    def test_order(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"family": {"polys": ["3n", "n+N"]},
                                   "experiment": {"N": 100, "seed": 1}}))
        code, summary, out = run_cli(["order", "--config", str(cfg)], tmp_path)
        assert code == 0
        assert summary["exceptional_count"] == 1
        assert (out / "order.csv").exists()

    def test_sieve(self, tmp_path):
        code, summary, _ = run_cli(
            ["sieve", "--a", "2", "--b", "1", "--alphas", "1,0",
             "--N", "16", "--seed", "1"], tmp_path)
        assert code == 0 and summary["count"] == 4

    def test_simulate_reports_m_n(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "family": {"polys": ["n", "n+N", "n^2"]},
            "observable": {"kind": "indicator_product", "targets": [[1], [1], [1]]},
            "experiment": {"N": 200, "seed": 5, "centered": False}}))
        code, summary, _ = run_cli(["simulate", "--config", str(cfg)], tmp_path)
        assert code == 0
        assert summary["M_N"] is not None
        import math
        s1 = summary["path"]["values"][-1]
        assert summary["M_N"] == pytest.approx(math.sqrt(200) * s1)

    def test_slln_seed_echo(self, tmp_path):
        code, summary, _ = run_cli(["slln", "--seed", "7", "--N", "4000"], tmp_path)
        assert code == 0 and summary["seed"] == 7

    def test_failing_verdict_exits_2(self, tmp_path):
        # tau_N ln^2 N is not decreasing on a short desk-scale grid with the
        # two-state profile; the stein-audit verdict fails and exit code is 2
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "family": {"polys": ["n", "n+N", "n^2"]},
            "process": {"kind": "markov",
                        "P": [["9/10", "1/10"], ["1/10", "9/10"]], "f": [0, 1]},
            "observable": {"kind": "indicator_product", "targets": [[1], [1], [1]]},
            "experiment": {"N_grid": [256, 512], "seed": 3, "reps": 30}}))
        code, summary, _ = run_cli(["stein-audit", "--config", str(cfg)], tmp_path)
        assert code == 2
        assert summary["verdicts"]["tau_log2_decreasing"] is False

    def test_moments_csv_schema(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"experiment": {"N_grid": [256, 512],
                                                  "reps": 60, "seed": 2}}))
        code, _, out = run_cli(["moments", "--config", str(cfg)], tmp_path)
        assert code == 0
        header = (out / "moments.csv").read_text().splitlines()[0]
        assert header == "N,statistic,value,stderr,pass"

    def test_entry_point_installed(self):
        proc = subprocess.run([sys.executable, "-m", "nonconv.cli", "classify",
                               "--p", "n^2", "--q", "n^3", "--seed", "1",
                               "--out", "/tmp/nc_cli_test"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert '"different_degree"' in proc.stdout
