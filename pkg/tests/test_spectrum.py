"""Spectral diagnostics: eigenvalues, crossing location, adiabatic tracking."""

import numpy as np
import pytest

from braggsim.ladder import TridiagonalH, hamiltonian
from braggsim.scenarios import MirrorParams
from braggsim.spectrum import (
    adiabatic_track,
    adiabaticity_report,
    instantaneous_spectrum,
    locate_crossings,
)

# Constant-envelope mirror: negligible ramps so every crossing sees the
# full coupling and sits at its predicted time t_c + (2n+1)/alpha.
FLAT = MirrorParams(target=8, n_max=12, omega0=0.3, ramp_up=0.5, ramp_down=0.5,
                    plateau=200.0)


class TestInstantaneousSpectrum:
    def test_matches_dense_eigvalsh(self):
        rng = np.random.default_rng(21)
        h = TridiagonalH(rng.normal(size=9),
                         rng.normal(size=8) + 1j * rng.normal(size=8))
        vals = instantaneous_spectrum(h)
        assert np.allclose(vals, np.linalg.eigvalsh(h.dense()), atol=1e-10)

    def test_eigenvectors_reconstruct(self):
        rng = np.random.default_rng(22)
        h = TridiagonalH(rng.normal(size=7),
                         rng.normal(size=6) + 1j * rng.normal(size=6))
        vals, vecs = instantaneous_spectrum(h, eigenvectors=True)
        assert np.allclose(vecs @ np.diag(vals) @ vecs.conj().T, h.dense(),
                           atol=1e-10)
        assert np.allclose(vecs.conj().T @ vecs, np.eye(7), atol=1e-10)


class TestLocateCrossings:
    def test_times_and_spacing(self):
        cfg = FLAT.config()
        records = locate_crossings(cfg, (10.0, 130.0))
        found = [r for r in records if r.pair[0] >= 0]
        assert len(found) >= 5
        for r in found:
            want = cfg.pulses[0].chirp.t_c + (2 * r.pair[0] + 1) / 0.1
            assert r.t_cross == pytest.approx(want, rel=1e-3)
        times = np.array([r.t_cross for r in found])
        assert np.allclose(np.diff(times), 20.0, rtol=1e-3)

    def test_gap_is_twice_coupling(self):
        cfg = FLAT.config()
        records = locate_crossings(cfg, (15.0, 45.0))
        rec = next(r for r in records if r.pair == (0, 1))
        assert rec.gap == pytest.approx(2.0 * 0.3, rel=0.05)

    def test_lz_time_and_ratio(self):
        cfg = FLAT.config()
        rec = locate_crossings(cfg, (15.0, 45.0))[0]
        assert rec.t_lz == pytest.approx(0.3 / 0.1, rel=1e-6)
        assert rec.adiabaticity_ratio == pytest.approx(rec.t_lz / rec.dt_spacing)

    def test_zero_chirp_rejected(self):
        cfg = FLAT.config()
        bad = type(cfg.pulses[0].chirp)(0.0, 10.0)
        from dataclasses import replace
        pulses = (replace(cfg.pulses[0], chirp=bad),)
        with pytest.raises(ValueError):
            locate_crossings(replace(cfg, pulses=pulses), (0.0, 10.0))

    def test_empty_window(self):
        assert locate_crossings(FLAT.config(), (10.0, 5.0)) == []


class TestAdiabaticityReport:
    def test_flags_slow_crossings(self):
        strong = MirrorParams(target=3, n_max=6, omega0=2.5, ramp_up=0.5,
                              ramp_down=0.5, plateau=70.0)
        rows = adiabaticity_report(strong.config(), (15.0, 65.0))
        assert rows and all(row["flagged"] for row in rows)  # t_lz = 25 > 20

    def test_clean_configuration_unflagged(self):
        rows = adiabaticity_report(FLAT.config(), (15.0, 65.0))
        assert rows and not any(row["flagged"] for row in rows)


class TestAdiabaticTrack:
    def test_follows_branch_through_crossing(self):
        cfg = FLAT.config()
        # The track entering the first crossing as diabatic n = 0 must leave
        # it as n = 1 (adiabatic passage swaps the diabatic labels).
        t0 = 12.0
        vals = instantaneous_spectrum(hamiltonian(cfg, t0))
        from braggsim.ladder import quasi_energy

        chirp = cfg.pulses[0].chirp
        start_idx = int(np.argmin(np.abs(vals - quasi_energy(0, chirp.rate(t0)))))
        times, track, (n_start, n_end) = adiabatic_track(cfg, (t0, 28.0), start_idx)
        assert (n_start, n_end) == (0, 1)
        assert times.size == track.size
        # The eigenvalue track is continuous (no branch jumps).
        assert np.max(np.abs(np.diff(track))) < 1.0
