"""Config parsing, serialization and subcommand behaviour."""

import json

import numpy as np
import pytest

from braggsim.cli import (
    ConfigError,
    SimConfig,
    bundled_config_text,
    cli_dispatch,
    emit_config,
    emit_summary,
    emit_trajectory,
    parse_config,
    selftest,
)
from braggsim.scenarios import (
    BLOCH_PRESETS,
    MirrorParams,
    SplitterParams,
    run_mirror,
)

TINY_MIRROR = """
mode = mirror
target = 2
alpha = 0.1
t_c = 10.0
omega0 = 0.7
ramp_up = 16.0
ramp_down = 14.0
n_max = 7
record_stride = 1000
"""


class TestParseConfig:
    def test_minimal(self):
        cfg = parse_config(TINY_MIRROR)
        assert cfg.mode == "mirror" and cfg.target == 2
        assert cfg.plateau is None and cfg.sign == -1

    def test_comments_and_blank_lines(self):
        cfg = parse_config("# header\n\n" + TINY_MIRROR + "q = 0.1  # inline\n")
        assert cfg.q == pytest.approx(0.1)

    @pytest.mark.parametrize("extra,fragment", [
        ("wavelength = 780", "unknown key"),
        ("target = 3", "duplicate key"),
        ("no equals sign here", "expected 'key = value'"),
        ("dt = fast", "cannot parse"),
        ("q = 1.5", "|q| <= 1"),
        ("sign = 0", "sign must be"),
        ("shape = boxcar", "shape must be"),
        ("frame = lab", "frame must be"),
        ("delay = 5.0", "splitter mode only"),
        ("dt = 0.0", "dt must be > 0"),
    ])
    def test_violations(self, extra, fragment):
        with pytest.raises(ConfigError) as err:
            parse_config(TINY_MIRROR + extra + "\n")
        assert any(fragment in v for v in err.value.violations)

    def test_missing_required_all_reported(self):
        with pytest.raises(ConfigError) as err:
            parse_config("mode = mirror\n")
        missing = [v for v in err.value.violations if "missing required" in v]
        assert len(missing) == 6

    def test_splitter_requires_bare_frame(self):
        text = TINY_MIRROR.replace("mode = mirror", "mode = splitter")
        with pytest.raises(ConfigError) as err:
            parse_config(text + "frame = rotating\n")
        assert any("bare frame" in v for v in err.value.violations)


class TestEmitConfig:
    def test_round_trip(self):
        cfg = parse_config(TINY_MIRROR)
        assert parse_config(emit_config(cfg)) == cfg

    def test_round_trip_with_delay(self):
        text = TINY_MIRROR.replace("mode = mirror", "mode = splitter")
        cfg = parse_config(text + "delay = 6.5\ndt = 0.0005\n")
        again = parse_config(emit_config(cfg))
        assert again == cfg and again.delay == pytest.approx(6.5)


class TestSimConfigParams:
    def test_mirror_dispatch(self):
        params = parse_config(TINY_MIRROR).params()
        assert isinstance(params, MirrorParams)
        assert params.frame == "rotating"

    def test_splitter_dispatch(self):
        text = TINY_MIRROR.replace("mode = mirror", "mode = splitter")
        params = parse_config(text + "delay = 6.5\n").params()
        assert isinstance(params, SplitterParams)
        assert params.delay == pytest.approx(6.5)


class TestBundledConfigs:
    @pytest.mark.parametrize("name", [
        "fig2.cfg", "fig3.cfg", "fig1b_dotted.cfg", "fig1b_dashed.cfg",
        "fig1b_solid.cfg",
    ])
    def test_parse_and_round_trip(self, name):
        cfg = parse_config(bundled_config_text(name))
        assert parse_config(emit_config(cfg)) == cfg

    @pytest.mark.parametrize("name,preset", [
        ("fig1b_dotted.cfg", "dotted"),
        ("fig1b_dashed.cfg", "dashed"),
        ("fig1b_solid.cfg", "solid"),
    ])
    def test_bloch_configs_match_presets(self, name, preset):
        cfg_params = parse_config(bundled_config_text(name)).params()
        preset_params = BLOCH_PRESETS[preset].mirror_params()
        for f in ("target", "alpha", "t_c", "omega0", "ramp_up", "ramp_down",
                  "plateau", "n_max", "sign"):
            assert getattr(cfg_params, f) == getattr(preset_params, f), f

    def test_unknown_bundle(self):
        with pytest.raises(FileNotFoundError):
            bundled_config_text("fig99.cfg")


@pytest.fixture(scope="module")
def small_run():
    return run_mirror(parse_config(TINY_MIRROR).params())


class TestSerialization:
    def test_trajectory_csv(self, small_run, tmp_path):
        traj, _ = small_run
        path = tmp_path / "traj.csv"
        emit_trajectory(traj, str(path))
        lines = path.read_text().splitlines()
        header = lines[0].split(",")
        assert header[0] == "t" and header[-2:] == ["v_mean", "norm"]
        assert len(header) == traj.populations.shape[1] + 3
        data = np.loadtxt(str(path), delimiter=",", skiprows=1)
        assert data.shape[0] == traj.times.size
        assert np.allclose(data[:, 0], traj.times)
        assert np.allclose(data[:, -1], traj.norms)

    def test_summary_json(self, small_run, tmp_path):
        _, metrics = small_run
        path = tmp_path / "summary.json"
        emit_summary(metrics, str(path), parse_config(TINY_MIRROR))
        doc = json.loads(path.read_text())
        assert doc["config"]["mode"] == "mirror"
        assert doc["metrics"]["fidelity"] == pytest.approx(metrics.fidelity)
        assert doc["metrics"]["final_populations"]["2"] == pytest.approx(
            metrics.population(2))


class TestDispatch:
    @pytest.fixture()
    def config_file(self, tmp_path):
        path = tmp_path / "tiny.cfg"
        path.write_text(TINY_MIRROR)
        return str(path)

    def test_simulate(self, config_file, tmp_path, capsys):
        traj = str(tmp_path / "out.csv")
        summary = str(tmp_path / "out.json")
        code = cli_dispatch(["simulate", config_file, "--trajectory", traj,
                             "--summary", summary])
        assert code == 0
        assert "fidelity" in capsys.readouterr().out
        assert json.loads(open(summary).read())["metrics"]["fidelity"] > 0.9

    def test_simulate_bundled_name(self, tmp_path, monkeypatch, capsys):
        monkeypatch.chdir(tmp_path)
        code = cli_dispatch(["simulate", "fig1b_dotted.cfg"])
        assert code == 0
        assert (tmp_path / "fig1b_dotted_summary.json").exists()

    def test_missing_config_is_machine_readable(self, capsys):
        code = cli_dispatch(["simulate", "nope.cfg"])
        assert code == 1
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "FileNotFoundError"

    def test_crossings(self, config_file, tmp_path, capsys):
        out = str(tmp_path / "crossings.csv")
        assert cli_dispatch(["crossings", config_file, "--out", out]) == 0
        lines = open(out).read().splitlines()
        assert lines[0].startswith("n,n_next,t_cross")
        assert len(lines) > 1

    def test_spectrum(self, config_file, tmp_path):
        out = str(tmp_path / "spectrum.csv")
        assert cli_dispatch(["spectrum", config_file, "--samples", "50",
                             "--out", out]) == 0
        data = np.loadtxt(out, delimiter=",", skiprows=1)
        assert data.shape == (50, 16)  # t plus 15 eigenvalues

    def test_scan(self, config_file, tmp_path):
        out = str(tmp_path / "scan.json")
        assert cli_dispatch(["scan", config_file, "--param", "omega0",
                             "--values", "0.5,0.7", "--out", out]) == 0
        doc = json.loads(open(out).read())
        assert doc["parameter"] == "omega0" and len(doc["fidelities"]) == 2

    def test_units(self, capsys):
        code = cli_dispatch(["units", "--omega-k-hz", "50000", "--n", "25",
                             "--alpha", "0.1"])
        assert code == 0
        out = capsys.readouterr().out
        assert "2.5 MHz" in out and "1.5708 kHz/us" in out

    def test_selftest_command(self, capsys):
        assert cli_dispatch(["selftest"]) == 0
        assert "selftest passed" in capsys.readouterr().out

    def test_selftest_function(self):
        assert selftest() == []
