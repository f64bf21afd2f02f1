import json
import subprocess
import sys

import numpy as np
import pytest

from spdcrc.cli import main
from spdcrc.config import RunConfig, resolve
from spdcrc.datasets import read_matrix_file
from spdcrc.reports import read_report

FAST = ["--repeats", "2"]


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestConfig:
    def test_defaults(self):
        cfg = resolve({}, environ={})
        assert cfg.lambda1 == 0.01 and cfg.lambda2 == 0.5 and cfg.beta_value() is None

    def test_precedence(self, tmp_path):
        ini = tmp_path / "c.ini"
        ini.write_text("[crc]\nlambda1 = 0.3\nlambda2 = 0.7\nbeta = 2\n[run]\nseed = 4\n")
        env = {"SPDCRC_LAMBDA1": "0.2", "SPDCRC_SEED": "9"}
        cfg = resolve({"lambda1": 0.1, "seed": None}, ini, env)
        assert cfg.lambda1 == 0.1  # flag beats env and file
        assert cfg.seed == 9       # env beats file
        assert cfg.lambda2 == 0.7  # file beats default
        assert cfg.beta_value() == 2.0

    def test_synthetic_section(self, tmp_path):
        ini = tmp_path / "c.ini"
        ini.write_text("[data]\nsynthetic = default\n[synthetic]\nambient_dim = 6\nexact_covariance = false\n")
        cfg = resolve({}, ini, {})
        assert cfg.synthetic == "default"
        assert cfg.synthetic_overrides == {"ambient_dim": 6, "exact_covariance": False}

    def test_unknown_key(self, tmp_path):
        ini = tmp_path / "c.ini"
        ini.write_text("[crc]\nlambda9 = 1\n")
        with pytest.raises(ValueError):
            resolve({}, ini, {})

    def test_bad_beta(self):
        with pytest.raises(ValueError):
            RunConfig(beta="-1").beta_value()

    def test_provenance_omits_volatile(self):
        assert not {"threads", "output", "format"} & set(RunConfig().provenance())


class TestDescribe:
    def test_fixture(self, tmp_path, fixture_manifest, capsys):
        code, _, _ = run(["describe", "--manifest", str(fixture_manifest), "--output", str(tmp_path / "d")], capsys)
        assert code == 0
        files = sorted(p.name for p in (tmp_path / "d").glob("*.txt"))
        assert len(files) == 4
        for name in files:
            x = read_matrix_file(tmp_path / "d" / name)
            assert x.shape == (400, 400)
            np.testing.assert_array_equal(x, x.T)
            assert np.linalg.eigvalsh(x)[0] > 0
        summary = json.loads((tmp_path / "d" / "summary.json").read_text())
        assert len(summary["sets"]) == 4

    def test_rerun_byte_identical(self, tmp_path, fixture_manifest, capsys):
        for d in ("x", "y"):
            assert run(["describe", "--manifest", str(fixture_manifest), "--output", str(tmp_path / d)], capsys)[0] == 0
        for p in (tmp_path / "x").iterdir():
            assert p.read_bytes() == (tmp_path / "y" / p.name).read_bytes()

    def test_missing_manifest(self, tmp_path, capsys):
        code, _, err = run(["describe", "--manifest", str(tmp_path / "no.json"), "--output", str(tmp_path)], capsys)
        assert code == 1 and "no.json" in err


class TestEval:
    def test_default_accuracy(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        code, stdout, _ = run(["eval", "--synthetic", "default", "--method", "log_crc", "--lambda1", "0.01",
                               "--seed", "7", "--output", str(out), "--threads", "1"], capsys)
        assert code == 0
        report = read_report(out)
        assert report.mean >= 0.95
        assert "log_crc" in stdout and "±" in stdout
        assert report.config["lambda1"] == 0.01 and report.config["split"]["repeats"] == 10
        assert report.config["source"]["synthetic_spec"]["seed"] == 7

    def test_crc_not_above_log(self, tmp_path, capsys):
        means = {}
        for m in ("log_crc", "crc"):
            out = tmp_path / f"{m}.json"
            assert run(["eval", "--synthetic", "default", "--method", m, "--seed", "7", "--threads", "1",
                        "--output", str(out)] + FAST, capsys)[0] == 0
            means[m] = read_report(out).mean
        assert means["crc"] <= means["log_crc"]

    def test_kernel_beta_recorded(self, tmp_path, fixture_manifest, capsys):
        out = tmp_path / "r.json"
        assert run(["eval", "--manifest", str(fixture_manifest), "--method", "logek_crc", "--threads", "1",
                    "--output", str(out)] + FAST, capsys)[0] == 0
        d = json.loads(out.read_text())
        assert len(d["derived"]["beta"]) == 2 and d["results"]["mean"] == 1.0

    def test_csv_output(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        assert run(["eval", "--synthetic", "default", "--format", "csv", "--output", str(out)] + FAST, capsys)[0] == 0
        assert out.read_text().startswith("record,method,repeat")

    def test_unknown_method(self, capsys):
        assert run(["eval", "--synthetic", "default", "--method", "nope"], capsys)[0] == 2

    def test_env_method_validated(self, monkeypatch, capsys):
        monkeypatch.setenv("SPDCRC_METHOD", "nope")
        assert run(["eval", "--synthetic", "default"], capsys)[0] == 2

    @pytest.mark.parametrize("argv", [
        ["eval"],
        ["eval", "--synthetic", "default", "--manifest", "x.json"],
        ["eval", "--synthetic", "nope"],
        ["eval", "--synthetic", "default", "--beta", "-2"],
        ["eval", "--synthetic", "default", "--threads", "0"],
    ])
    def test_usage_errors(self, argv, capsys):
        assert run(argv, capsys)[0] == 2

    def test_error_json(self, tmp_path, capsys):
        code, _, err = run(["eval", "--manifest", str(tmp_path / "gone.json"), "--error-json"], capsys)
        assert code == 1
        payload = json.loads(err.strip().splitlines()[-1])
        assert payload["exit_code"] == 1 and payload["error"] == "IoError"

    def test_insufficient_sets(self, fixture_manifest, capsys):
        assert run(["eval", "--manifest", str(fixture_manifest), "--train-per-class", "2"], capsys)[0] == 1


class TestSweep:
    def test_shape(self, tmp_path, capsys):
        out = tmp_path / "s.json"
        code, stdout, _ = run(["sweep", "--synthetic", "default", "--method", "log_crc", "--grid",
                               "0.01,0.05,0.1,0.5,1", "--output", str(out), "--threads", "1"] + FAST, capsys)
        assert code == 0
        r = read_report(out)
        assert len(r.sweep) == 5 and r.selected_lambda in (0.01, 0.05, 0.1, 0.5, 1.0)
        assert "selected lambda" in stdout

    def test_rows_match_eval(self, tmp_path, capsys):
        run(["sweep", "--synthetic", "default", "--method", "logek_crc", "--grid", "0.05,2",
             "--output", str(tmp_path / "s.json"), "--threads", "1"] + FAST, capsys)
        sweep = read_report(tmp_path / "s.json").sweep
        for p in sweep:
            run(["eval", "--synthetic", "default", "--method", "logek_crc", "--lambda2", str(p.lam),
                 "--output", str(tmp_path / "e.json"), "--threads", "1"] + FAST, capsys)
            assert read_report(tmp_path / "e.json").mean == pytest.approx(p.mean, abs=1e-12)

    @pytest.mark.parametrize("grid", ["", "a,b", "-1"])
    def test_bad_grid(self, grid, capsys):
        assert run(["sweep", "--synthetic", "default", "--grid", grid], capsys)[0] == 2


class TestBench:
    def test_two_methods(self, tmp_path, capsys):
        out = tmp_path / "b.json"
        code, stdout, _ = run(["bench", "--synthetic", "default", "--methods", "log_crc,logek_crc",
                               "--output", str(out)], capsys)
        assert code == 0
        d = json.loads(out.read_text())
        assert set(d["methods"]) == {"log_crc", "logek_crc"}
        assert all(m["count"] == 12 for m in d["methods"].values())
        assert "ms/query" in stdout

    def test_counts_stable_and_single_probe(self, tmp_path, capsys):
        counts = []
        for _ in range(2):
            run(["bench", "--synthetic", "default", "--methods", "log_crc", "--max-queries", "1",
                 "--output", str(tmp_path / "b.json")], capsys)
            counts.append(json.loads((tmp_path / "b.json").read_text())["methods"]["log_crc"]["count"])
        assert counts == [1, 1]

    def test_csv(self, tmp_path, capsys):
        run(["bench", "--synthetic", "default", "--methods", "crc", "--format", "csv",
             "--output", str(tmp_path / "b.csv")], capsys)
        assert (tmp_path / "b.csv").read_text().startswith("method,per_query_mean_seconds")

    def test_bad_methods(self, capsys):
        assert run(["bench", "--synthetic", "default", "--methods", "log_crc,bogus"], capsys)[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "spdcrc", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
