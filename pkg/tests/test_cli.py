import json
import subprocess
import sys

import pytest

from chaoslab.cli import SCHEMAS, ExperimentConfig, main, parse_config_text, run
from chaoslab.errors import ConfigError


def _json(path):
    return json.loads(path.read_text())


class TestConfig:
    @pytest.mark.parametrize("command", sorted(SCHEMAS))
    def test_roundtrip(self, command):
        cfg = ExperimentConfig(command, seed=11, out="x")
        back = ExperimentConfig.from_text(cfg.to_text())
        assert back.to_text() == cfg.to_text()
        assert back.params == cfg.params

    def test_roundtrip_lists(self):
        cfg = ExperimentConfig("spectrum", {"alphas": [-1.5, 0.25], "n": 64})
        back = ExperimentConfig.from_text(cfg.to_text())
        assert back.params["alphas"] == [-1.5, 0.25] and back.params["n"] == 64

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as exc:
            ExperimentConfig("lln", {"bogus": 1})
        assert exc.value.key == "bogus"

    def test_unknown_command(self):
        with pytest.raises(ConfigError):
            ExperimentConfig("nope")

    def test_parse_text_comments(self):
        d = parse_config_text("# c\ncommand = lln\n\nalpha = 0.5\n")
        assert d == {"command": "lln", "alpha": "0.5"}


class TestMain:
    def test_selftest(self, tmp_path):
        assert main(["selftest", "--out", str(tmp_path)]) == 0
        assert _json(tmp_path / "selftest-0.json")["passed"]

    def test_bad_flag(self, tmp_path, capsys):
        assert main(["lln", "--bogus", "1", "--out", str(tmp_path)]) == 1
        assert "usage error" in capsys.readouterr().err

    def test_bad_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "c.txt"
        cfg.write_text("command = lln\nsamples = 10\nwidth = 3\n")
        assert main(["lln", "--config", str(cfg), "--out", str(tmp_path)]) == 1
        assert "width" in capsys.readouterr().err

    def test_config_file_and_override(self, tmp_path):
        cfg = tmp_path / "c.txt"
        cfg.write_text("command = free-energy\nalpha = 1.0\nbeta = 0.5\nn-list = 1000,10000\nseed = 3\n")
        assert main(["free-energy", "--config", str(cfg), "--out", str(tmp_path), "--beta", "0.25"]) == 0
        out = _json(tmp_path / "free-energy-3.json")
        assert out["params"]["beta"] == 0.25 and out["params"]["n-list"] == [1000, 10000]

    def test_kernel_figure(self, tmp_path):
        assert main(["kernel-figure", "--alpha", "1", "--out", str(tmp_path)]) == 0
        svg = (tmp_path / "kernel-figure-0.svg").read_text()
        assert svg.startswith("<svg") and svg.count("<polyline") >= 2
        rep = _json(tmp_path / "kernel-figure-0.json")["report"]
        assert rep["even_singularities"] == ["0", "pi"] and rep["odd_singularities"] == ["0"]

    def test_short_hellinger_fails(self, tmp_path):
        # at N=500 the exact affinity of (1, -1) is still above 0.1
        assert main(["hellinger", "--n", "500", "--out", str(tmp_path)]) == 2

    def test_failed_check_exit_two(self, tmp_path):
        # eta far too large for the budget: widen-budget flag, exit 2
        argv = ["ld-rate", "--eta", "3", "--samples", "50", "--n-list", "1000,2000", "--out", str(tmp_path)]
        assert main(argv) == 2

    @pytest.mark.parametrize("argv", [
        ["hellinger", "--n", "10000"],
        ["hellinger", "--n", "2000", "--other", "perturbed"],
        ["capacity", "--mask", "two-cells", "--m", "64"],
        ["energy", "--count", "3", "--m", "256"],
        ["simulate", "--n", "100", "--m", "512", "--alpha", "0.5"],
        ["mass-decay", "--alpha", "1", "--n-list", "50,100", "--replicas", "30"],
    ])
    def test_deterministic_outputs(self, tmp_path, argv):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(argv + ["--seed", "5", "--out", str(a), "--threads", "1"]) == 0
        assert main(argv + ["--seed", "5", "--out", str(b), "--threads", "2"]) == 0
        names = sorted(p.name for p in a.iterdir())
        assert names == sorted(p.name for p in b.iterdir())
        for n in names:
            assert (a / n).read_bytes() == (b / n).read_bytes()

    def test_run_returns_files(self, tmp_path):
        status, files = run(ExperimentConfig("hellinger", {"other": "perturbed"}, out=str(tmp_path)))
        assert status == 0 and {f.suffix for f in files} >= {".json"}

    @pytest.mark.slow
    def test_lln_example(self, tmp_path):
        argv = ["lln", "--alpha", "1", "--n", "20000", "--samples", "300", "--seed", "7", "--out", str(tmp_path)]
        main(argv)
        rep = _json(tmp_path / "lln-7.json")["report"]
        assert abs(rep["estimate"] - 0.5) < 0.15 and "oracle" in rep and "passed" in rep


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "chaoslab", "hellinger", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "PASS" in r.stdout
