"""Scenario drivers: parameter objects, runs, calibration, scans, units."""

import warnings
from dataclasses import replace

import numpy as np
import pytest

from braggsim.ladder import DEFAULT_CHIRP_SIGN
from braggsim.scenarios import (
    BLOCH_PRESETS,
    AdiabaticityWarning,
    BlochParams,
    CalibrationError,
    LabUnits,
    MirrorParams,
    SplitterParams,
    calibrate,
    convert_units,
    convert_units_inverse,
    critical_spread,
    parameter_scan,
    q_spread_scan,
    run_bloch,
    run_mirror,
    run_splitter,
)

MIRROR_SMALL = MirrorParams(target=3, n_max=8, ramp_up=20.0, ramp_down=16.0)
SPLITTER_SMALL = SplitterParams(target=5, ramp_up=10.0, ramp_down=10.0)


class TestMirrorParams:
    def test_default_plateau_ends_before_next_crossing(self):
        p = MirrorParams()
        # Support ends at t_c + (2*target+1)/alpha minus 20% of the spacing.
        t_end = p.ramp_up + p.default_plateau() + p.ramp_down
        assert t_end == pytest.approx(10.0 + 51.0 / 0.1 - 0.2 * 20.0)

    def test_climb_direction(self):
        assert MirrorParams().climb_direction == 1
        assert MirrorParams(sign=-DEFAULT_CHIRP_SIGN).climb_direction == -1
        assert MirrorParams(alpha=-0.1).climb_direction == -1
        assert MirrorParams(target=25).target_level == 25
        assert MirrorParams(target=25, alpha=-0.1).target_level == -25

    def test_config_structure(self):
        cfg = MirrorParams().config()
        assert cfg.mode == "mirror" and len(cfg.pulses) == 1
        assert cfg.n_max == 33  # |target| + margin

    def test_short_plateau_warns(self):
        with pytest.warns(AdiabaticityWarning):
            MirrorParams(target=10, plateau=20.0).config()

    @pytest.mark.parametrize("kwargs", [dict(target=0), dict(alpha=0.0)])
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            MirrorParams(**kwargs)


class TestSplitterParams:
    def test_default_delay_clears_wrong_crossing(self):
        p = SplitterParams()
        # Both chirps are resonant with the opposite branch at
        # t_c - 1/alpha = 10; the envelope starts 20% of a spacing later.
        assert p.default_delay() == pytest.approx(14.0)
        assert SplitterParams(t_c=5.0).default_delay() == pytest.approx(0.0)

    def test_default_plateau(self):
        p = SplitterParams()
        end = p.default_delay() + p.ramp_up + p.default_plateau() + p.ramp_down
        assert end == pytest.approx(20.0 + 51.0 / 0.1 - 0.2 * 20.0)

    def test_config_structure(self):
        cfg = SplitterParams().config()
        assert cfg.mode == "splitter" and cfg.frame == "bare"
        c1, c2 = (p.chirp for p in cfg.pulses)
        assert c1.sign == -c2.sign and c1.alpha == c2.alpha
        assert cfg.pulses[0].envelope == cfg.pulses[1].envelope
        assert cfg.pulses[0].envelope.delay == pytest.approx(14.0)


class TestRuns:
    def test_mirror_reaches_target(self):
        traj, m = run_mirror(MIRROR_SMALL)
        assert m.fidelity > 0.9
        assert int(np.argmax(traj.final_populations)) - 8 == 3
        assert abs(traj.norms[-1] - 1.0) < 1e-9

    def test_mirror_negative_chirp_descends(self):
        _, m = run_mirror(replace(MIRROR_SMALL, alpha=-0.1))
        assert m.population(-3) > 0.9

    def test_splitter_symmetric(self):
        traj, m = run_splitter(SPLITTER_SMALL)
        p = traj.final_populations
        assert np.max(np.abs(p - p[::-1])) < 1e-9
        assert m.targets == (5, -5)

    def test_bloch_period_extraction(self):
        short = BlochParams(alpha=0.01, omega0=0.15, duration=500.0,
                            record_stride=100)
        traj, m = run_bloch(short)
        assert m.bloch_period == pytest.approx(200.0, rel=0.05)

    def test_bloch_presets(self):
        assert set(BLOCH_PRESETS) == {"dotted", "dashed", "solid"}
        mp = BLOCH_PRESETS["dotted"].mirror_params()
        total = mp.ramp_up + mp.plateau + mp.ramp_down
        assert total == pytest.approx(3.7 * 200.0)


class TestCalibrate:
    def test_finds_feasible_point(self):
        base = MirrorParams(target=3, n_max=8, ramp_down=10.0)
        omega0, ramp_up, ramp_down = calibrate(
            target_fidelity=0.9, omega0_bounds=(0.5, 0.8),
            ramp_bounds=(10.0, 20.0), base=base, n_omega=3, n_ramp=2,
            transient_threshold=0.15,
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            _, m = run_mirror(replace(base, omega0=omega0, ramp_up=ramp_up,
                                      ramp_down=ramp_down))
        assert m.fidelity >= 0.9

    def test_infeasible_bounds_raise(self):
        base = MirrorParams(target=3, n_max=8, ramp_down=10.0)
        with pytest.raises(CalibrationError):
            calibrate(target_fidelity=0.99, omega0_bounds=(0.01, 0.02),
                      ramp_bounds=(5.0, 6.0), base=base, n_omega=2, n_ramp=2)

    def test_bad_bounds(self):
        with pytest.raises(ValueError):
            calibrate(omega0_bounds=(0.9, 0.3))


class TestScans:
    def test_parameter_scan(self):
        base = replace(MIRROR_SMALL, record_stride=1000)
        result = parameter_scan(base, "omega0", [0.1, 0.7])
        assert result.parameter == "omega0"
        assert len(result.metrics) == 2
        assert result.fidelities()[1] > result.fidelities()[0]
        assert result.provenance["target"] == 3

    def test_scan_values_must_increase(self):
        with pytest.raises(ValueError):
            parameter_scan(MIRROR_SMALL, "omega0", [0.7, 0.3])

    def test_q_spread_zero_sigma_matches_direct(self):
        _, direct = run_mirror(MIRROR_SMALL)
        result = q_spread_scan(MIRROR_SMALL, [0.0], grid_size=5)
        assert result.metrics[0].fidelity == pytest.approx(direct.fidelity)

    def test_q_spread_validation(self):
        with pytest.raises(ValueError):
            q_spread_scan(MIRROR_SMALL, [0.1], grid_size=4)
        with pytest.raises(ValueError):
            q_spread_scan(MIRROR_SMALL, [-0.1])


class TestUnits:
    def test_sheet_values(self):
        sheet = convert_units(LabUnits(50e3), 25, 0.1, durations={"total": 520.0})
        assert sheet["span_hz"] == pytest.approx(2.5e6)
        # alpha = 0.1 recoil units -> ~1.6 kHz/us.
        assert sheet["chirp_hz_per_s"] / 1e9 == pytest.approx(1.6, rel=0.02)
        assert sheet["total_s"] == pytest.approx(520.0 / (2 * np.pi * 50e3))

    def test_round_trip(self):
        sheet = convert_units(LabUnits(50e3), 25, 0.1, durations={"total": 520.0})
        back = convert_units_inverse(sheet)
        assert back["n"] == pytest.approx(25.0)
        assert back["alpha"] == pytest.approx(0.1)
        assert back["total"] == pytest.approx(520.0)

    def test_lab_units_validation(self):
        with pytest.raises(ValueError):
            LabUnits(0.0)

    def test_critical_spread(self):
        assert critical_spread(25, 520.0) == pytest.approx(1.0 / 26000.0)
        with pytest.raises(ValueError):
            critical_spread(0, 520.0)
        with pytest.raises(ValueError):
            critical_spread(25, 0.0)


def test_adiabaticity_warning_for_strong_coupling():
    params = MirrorParams(target=2, n_max=6, omega0=2.2, ramp_up=5.0,
                          ramp_down=5.0, dt=2e-4)
    with pytest.warns(AdiabaticityWarning):
        run_mirror(params)
