import io
import json
import os
import pathlib

import pytest

from birthgrowth import analytic, cli
from birthgrowth.config import ConfigError, config_hash, parse_config, parse_text, serialize

ROOT = pathlib.Path(__file__).resolve().parent.parent
REFERENCE = ROOT / "configs" / "reference.ini"
GOLDEN = pathlib.Path(__file__).parent / "data" / "reference_table.csv"

SMALL = """
[model]
dimension = 1
[campaign]
replications = 120
seed = 4
"""


class TestConfig:
    def test_minimal_uses_defaults(self):
        exp = parse_text("[model]\ndimension = 1\n")
        spec = exp.spec
        assert spec.d == 1 and spec.time_intensity.lebesgue and spec.horizon == 1.0
        assert spec.window.sides == (1.0,) and spec.speed.kind == "point"
        assert exp.campaign.replications == 1000 and exp.campaign.seed == 0
        assert exp.directory == "results" and exp.table == "table.csv"

    def test_tau_below_range_names_key(self):
        with pytest.raises(ConfigError) as info:
            parse_text("[model]\ntau = -1.5\n")
        assert any("tau" in e and "-1" in e for e in info.value.errors)

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="horizon"):
            parse_text("[model]\nhorizon = 1\nhorizon = 2\n")

    @pytest.mark.parametrize(
        "text,needle",
        [
            ("[model]\nhorizn = 1\n", "horizn"),
            ("[modle]\n", "modle"),
            ("[speed]\nkind = point\nupper = 2\n", "upper"),
            ("[window]\nshape = ball\nsides = 1\n", "sides"),
            ("[speed]\nkind = warp\n", "warp"),
            ("[campaign]\nreplications = ten\n", "replications"),
        ],
    )
    def test_rejects(self, text, needle):
        with pytest.raises(ConfigError, match=needle):
            parse_text(text)

    def test_multiple_errors_collected(self):
        with pytest.raises(ConfigError) as info:
            parse_text("[model]\nhorizon = -1\n[campaign]\nreplications = 5\n")
        text = str(info.value)
        assert "horizon" in text and "replications" in text

    @pytest.mark.parametrize(
        "text",
        [
            SMALL,
            "[model]\ndimension = 2\ntau = 0.3\n[window]\nshape = ball\nradius = 0.7\n"
            "[speed]\nkind = lognormal\nmu = -0.1\nsigma = 0.4\n",
            "[speed]\nkind = discrete\nvalues = 1, 3\nprobabilities = 0.25, 0.75\n"
            "[campaign]\nscaling = intensity\nscales = 1, 2.5, 10\nalgorithm = both\n",
            "[model]\ndimension = 3\n[window]\nsides = 1, 2, 0.1\n[speed]\nkind = pareto\nalpha = 30\nscale = 0.1\ncap = 5\n"
            "[quadrature]\nrtol = 1e-9\n[output]\ndirectory = out/x\n",
        ],
    )
    def test_round_trip(self, text):
        exp = parse_text(text)
        again = parse_text(serialize(exp))
        assert again == exp
        assert serialize(again) == serialize(exp)
        assert config_hash(again) == config_hash(exp)

    def test_reference_parses(self):
        exp = parse_config(REFERENCE)
        assert exp.campaign.seed == 12345 and exp.campaign.replications == 500

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            parse_config(tmp_path / "nope.ini")


def _write(tmp_path, text=SMALL):
    path = tmp_path / "exp.ini"
    path.write_text(text)
    return path


class TestRun:
    def test_writes_outputs(self, tmp_path, capsys):
        out = tmp_path / "deep" / "er"
        assert cli.main(["run", "--config", str(_write(tmp_path)), "--out", str(out), "--threads", "2"]) == 0
        table = (out / "table.csv").read_text().splitlines()
        assert table[0] == cli.TABLE_HEADER and len(table) == 121
        summary = json.loads((out / "summary.json").read_text())
        assert summary["provenance"]["master_seed"] == 4
        assert len(summary["provenance"]["config_sha256"]) == 64
        assert parse_text(summary["config"]).campaign.replications == 120
        assert summary["points"][0]["analytic"]["mean_F"] == pytest.approx(0.746824132812427, rel=1e-12)
        assert "scale 1" in capsys.readouterr().out

    def test_seed_flag_overrides(self, tmp_path):
        out = tmp_path / "o"
        cli.main(["run", "--config", str(_write(tmp_path)), "--out", str(out), "--seed", "99"])
        summary = json.loads((out / "summary.json").read_text())
        assert summary["provenance"]["master_seed"] == 99
        assert "seed = 99" in summary["config"]

    def test_uncreatable_directory(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        code = cli.main(["run", "--config", str(_write(tmp_path)), "--out", str(blocker / "sub")])
        assert code == 2
        assert "cannot create output directory" in capsys.readouterr().err

    def test_bad_config_exit_code(self, tmp_path, capsys):
        code = cli.main(["run", "--config", str(_write(tmp_path, "[model]\ntau = -1.5\n"))])
        assert code == 2
        assert "tau" in capsys.readouterr().err

    def test_bad_threads(self, tmp_path):
        assert cli.main(["run", "--config", str(_write(tmp_path)), "--threads", "0"]) == 2

    def test_dry_run(self, tmp_path, capsys):
        out = tmp_path / "never"
        assert cli.main(["run", "--config", str(_write(tmp_path)), "--out", str(out), "--dry-run"]) == 0
        text = capsys.readouterr().out
        assert "mean_F: 0.74682413281242" in text and "var_lower_vacuous: False" in text
        assert not out.exists()

    def test_nan_written_as_null(self, tmp_path):
        text = "[model]\nhorizon = 1e-9\n[window]\nsides = 1e-6\n[campaign]\nreplications = 100\n"
        out = tmp_path / "o"
        assert cli.main(["run", "--config", str(_write(tmp_path, text)), "--out", str(out)]) == 0
        raw = (out / "summary.json").read_text()
        assert "NaN" not in raw
        assert json.loads(raw)["points"][0]["d_K"] is None


def test_golden_reference_table(tmp_path):
    exp = parse_config(REFERENCE)
    out = tmp_path / "ref"
    assert cli.main(["run", "--config", str(REFERENCE), "--out", str(out)]) == 0
    assert (out / exp.table).read_bytes() == GOLDEN.read_bytes()


def test_tables_identical_across_threads(tmp_path):
    path = _write(tmp_path, "[speed]\nkind = uniform\nupper = 2\n[campaign]\nreplications = 150\nscaling = window\n"
                            "scales = 1, 3\nseed = 31\n")
    tables = []
    for threads in (1, 4, 8):
        out = tmp_path / f"t{threads}"
        assert cli.main(["run", "--config", str(path), "--out", str(out), "--threads", str(threads)]) == 0
        tables.append((out / "table.csv").read_bytes())
    assert tables[0] == tables[1] == tables[2]


class TestVerify:
    def test_all_pass(self, capsys):
        assert cli.main(["verify"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 10 and all(line.startswith("PASS") for line in lines)

    def test_fault_injection(self, monkeypatch, capsys):
        good = analytic.lambda_constant
        monkeypatch.setattr(analytic, "lambda_constant", lambda *a, **k: good(*a, **k) * (1 + 1e-6))
        assert cli.main(["verify"]) == 1
        out = capsys.readouterr().out
        assert "FAIL closed_form_big_lambda" in out


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "birthgrowth.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == cli.__version__
