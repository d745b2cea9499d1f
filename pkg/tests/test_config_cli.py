import csv
import json
import math

import pytest

from leakybox.cli import main, sweep_points
from leakybox.config import RunConfig
from leakybox.errors import ConfigError

CSIB = """\
[run]
t_end = 20

[initial_state]
kind = csib
alpha = 3

[physics]
dos_model = constant
dos_scale = 1e-3

[output]
csv = run.csv
summary = run.json
"""


def write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestRunConfig:
    def test_typed_views(self):
        cfg = RunConfig.from_text(CSIB)
        assert cfg.run_settings() == {"t_end": 20.0, "density_update": False, "record_every": 1,
                                      "n_max": None}
        assert cfg.state_spec() == {"kind": "csib", "alpha": 3.0, "alpha_phase": 0.0}
        assert cfg.policy().safety_c == 0.01
        assert cfg.physics_base().box_volume_V == 1.0

    def test_error_names_field_and_line(self):
        text = CSIB.replace("alpha = 3", "alpha = three")
        with pytest.raises(ConfigError) as info:
            RunConfig.from_text(text)
        assert info.value.path == "initial_state.alpha"
        assert info.value.line == 6

    @pytest.mark.parametrize("patch, path", [
        (("[output]", "[outputs]"), "outputs"),
        (("alpha = 3", "alpha = 3\nmean = 4"), "initial_state.mean"),
        (("t_end = 20", "t_end = 0"), "run.t_end"),
        (("dos_scale = 1e-3", "dos_scale = 1e-3\nleak_rate = -1"), "physics.leak_rate"),
    ])
    def test_rejections(self, patch, path):
        with pytest.raises(ConfigError) as info:
            RunConfig.from_text(CSIB.replace(*patch))
        assert info.value.path == path

    def test_round_trip(self):
        cfg = RunConfig.from_text(CSIB)
        again = RunConfig.from_text(cfg.to_text())
        assert again.data == cfg.data
        assert RunConfig.from_dict(cfg.data).data == cfg.data

    def test_inline_comments(self):
        cfg = RunConfig.from_text(CSIB.replace("alpha = 3", "alpha = 3    ; amplitude"))
        assert cfg.state_spec()["alpha"] == 3.0

    def test_override(self):
        cfg = RunConfig.from_text(CSIB).with_override("physics.box_volume", "2")
        assert cfg.physics_base().box_volume_V == 2.0
        with pytest.raises(ConfigError):
            RunConfig.from_text(CSIB).with_override("physics.volume", "2")

    def test_grid_limits(self):
        text = CSIB + "[sweep]\nmax_runs = 3\n[grid]\ninitial_state.alpha = 1, 2, 3, 4\n"
        with pytest.raises(ConfigError, match="max_runs"):
            sweep_points(RunConfig.from_text(text))


class TestCli:
    def test_evolve_writes_deterministic_output(self, tmp_path):
        cfg = write(tmp_path, CSIB)
        assert main(["evolve", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
        assert main(["evolve", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
        a = (tmp_path / "a" / "run.csv").read_bytes()
        assert a == (tmp_path / "b" / "run.csv").read_bytes()
        assert (tmp_path / "a" / "run.json").read_bytes() == (tmp_path / "b" / "run.json").read_bytes()
        summary = json.loads((tmp_path / "a" / "run.json").read_text())
        assert summary["config"]["initial_state"]["alpha"] == "3"
        assert summary["residuals"]["mean_decay_max_rel"] < 1e-3

    def test_plot_written(self, tmp_path):
        cfg = write(tmp_path, CSIB)
        assert main(["evolve", "--config", cfg, "--out", str(tmp_path), "--plot"]) == 0
        assert (tmp_path / "run.png").read_bytes()[:4] == b"\x89PNG"

    def test_malformed_config_exit_1(self, tmp_path, capsys):
        text = CSIB.replace("kind = csib\nalpha = 3", "kind = gaussian\nmean = 100\nfano = -1")
        assert main(["evolve", "--config", write(tmp_path, text)]) == 1
        assert "initial_state.fano (line 7)" in capsys.readouterr().err

    def test_missing_file_exit_1(self, tmp_path):
        assert main(["evolve", "--config", str(tmp_path / "nope.ini")]) == 1

    def test_truncation_exit_2(self, tmp_path, capsys):
        text = CSIB.replace("t_end = 20", "t_end = 20\nn_max = 20")
        assert main(["evolve", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == 2
        assert "tail" in capsys.readouterr().err

    def test_tampered_tolerance_fails_verify(self, tmp_path):
        cfg = write(tmp_path, "[verify]\ntol_generator_channel_agreement = 1e-30\n")
        assert main(["verify", "--config", cfg, "--out", str(tmp_path)]) == 3
        report = json.loads((tmp_path / "verify.json").read_text())
        failed = [c["name"] for c in report["checks"] if not c["pass"]]
        assert failed == ["generator_channel_agreement"]

    def test_unknown_check_exit_1(self, tmp_path):
        cfg = write(tmp_path, "[verify]\ntol_nothing = 1\n")
        assert main(["verify", "--config", cfg, "--out", str(tmp_path)]) == 1

    def test_empty_grid_header_only(self, tmp_path):
        cfg = write(tmp_path, CSIB + "[grid]\ninitial_state.alpha =\n")
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 0
        lines = (tmp_path / "sweep.csv").read_text().splitlines()
        assert len(lines) == 1
        assert lines[0].startswith("initial_state.alpha,final_mean_N")

    def test_volume_halves_decay_rate(self, tmp_path):
        cfg = write(tmp_path, CSIB + "[grid]\nphysics.box_volume = 2, 1\n")
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path), "--jobs", "2"]) == 0
        with open(tmp_path / "sweep.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert [float(r["physics.box_volume"]) for r in rows] == [1.0, 2.0]
        rates = [float(r["fitted_decay_rate"]) for r in rows]
        assert rates[0] == pytest.approx(2 * math.pi * 1e-3, rel=1e-3)
        assert rates[0] / rates[1] == pytest.approx(2.0, rel=1e-3)


class TestReproducibility:
    def test_recorded_config_reruns_identically(self, tmp_path):
        assert main(["evolve", "--config", write(tmp_path, CSIB), "--out", str(tmp_path / "a")]) == 0
        recorded = json.loads((tmp_path / "a" / "run.json").read_text())["config"]
        again = write(tmp_path, RunConfig.from_dict(recorded).to_text(), "again.ini")
        assert main(["evolve", "--config", again, "--out", str(tmp_path / "b")]) == 0
        assert (tmp_path / "a" / "run.csv").read_bytes() == (tmp_path / "b" / "run.csv").read_bytes()

    def test_fano_sweep_monotone(self, tmp_path):
        text = CSIB.replace("kind = csib\nalpha = 3", "kind = gaussian\nmean = 100\nfano = 1")
        text = text.replace("t_end = 20", "t_end = 20\nrecord_every = 1000")
        cfg = write(tmp_path, text + "[grid]\ninitial_state.fano = 2, 0.2, 1, 0.5\n")
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 0
        with open(tmp_path / "sweep.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        f0 = [float(r["initial_state.fano"]) for r in rows]
        f1 = [float(r["final_fano"]) for r in rows]
        assert f0 == [0.2, 0.5, 1.0, 2.0]
        assert f1 == sorted(f1)
        for a, b in zip(f0, f1):
            assert abs(b - 1.0) < abs(a - 1.0) or a == 1.0
