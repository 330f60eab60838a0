"""Instantaneous spectra, avoided-crossing location and adiabaticity tables.

The dressed (adiabatic) states are the instantaneous eigenstates of the
rotating-frame ladder Hamiltonian.  A linear chirp sweeps the diagonal so
that adjacent diabatic levels (n, n+1) cross sequentially with spacing
2/alpha; the coupling turns the crossings into avoided ones with gap
~ 2*Omega_e.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import minimize_scalar

from .ladder import LadderConfig, TridiagonalH, hamiltonian, quasi_energy

__all__ = [
    "CrossingRecord",
    "TrackingError",
    "instantaneous_spectrum",
    "locate_crossings",
    "adiabaticity_report",
    "adiabatic_track",
]


class TrackingError(RuntimeError):
    """Adiabatic tracking lost the branch (overlap below threshold)."""


@dataclass(frozen=True)
class CrossingRecord:
    """One avoided crossing between diabatic neighbours (n, n+1)."""

    pair: Tuple[int, int]
    t_cross: float
    gap: float
    t_lz: float
    dt_spacing: float

    @property
    def adiabaticity_ratio(self) -> float:
        """t_lz / dt_spacing; must be < 1 for sequential adiabatic transfer."""
        return self.t_lz / self.dt_spacing


def instantaneous_spectrum(h: TridiagonalH, eigenvectors: bool = False):
    """Sorted real eigenvalues (and optionally orthonormal eigenvectors).

    A Hermitian tridiagonal matrix is unitarily equivalent to a real
    symmetric one with |offdiag| couplings; the diagonal gauge is undone on
    the eigenvectors when they are requested.
    """
    mag = np.abs(h.offdiag)
    if not eigenvectors:
        return eigh_tridiagonal(h.diag, mag, eigvals_only=True)
    vals, vecs = eigh_tridiagonal(h.diag, mag)
    # Accumulated phases of the gauge transform D with D H D^dag real.
    phases = np.ones(h.dim, dtype=np.complex128)
    for j in range(h.dim - 1):
        e = h.offdiag[j]
        rot = e / abs(e) if abs(e) > 0.0 else 1.0
        phases[j + 1] = phases[j] * np.conj(rot)
    return vals, phases[:, None].conj() * vecs


def _spectrum_config(cfg: LadderConfig) -> LadderConfig:
    """Rotating-frame view used for dressed-state diagnostics."""
    if cfg.mode == "mirror" and cfg.frame != "rotating":
        from dataclasses import replace

        return replace(cfg, frame="rotating")
    return cfg


def _pair_gap(cfg: LadderConfig, pair: Tuple[int, int], t: float) -> float:
    """Separation of the two eigenvalues closest to the diabatic crossing."""
    scfg = _spectrum_config(cfg)
    vals = instantaneous_spectrum(hamiltonian(scfg, t))
    chirp = scfg.pulses[0].chirp
    phidot = chirp.rate(t) if scfg.frame == "rotating" else 0.0
    e_target = 0.5 * (
        quasi_energy(pair[0], phidot, scfg.q) + quasi_energy(pair[1], phidot, scfg.q)
    )
    idx = int(np.argmin(np.abs(vals - e_target)))
    lo = vals[idx - 1] if idx > 0 else -np.inf
    hi = vals[idx + 1] if idx < vals.size - 1 else np.inf
    return float(min(vals[idx] - lo, hi - vals[idx]))


def _predicted_crossing_time(cfg: LadderConfig, n: int) -> Optional[float]:
    """Root of phidot(t) = -(2n+1+q) for the (n, n+1) diabatic crossing."""
    chirp = cfg.pulses[0].chirp
    slope = chirp.sign * chirp.alpha
    if slope == 0.0:
        return None
    return chirp.t_c + (-(2 * n + 1 + cfg.q) + chirp.delta0) / slope


def locate_crossings(cfg: LadderConfig, window: Tuple[float, float]) -> List[CrossingRecord]:
    """Locate every adjacent-pair avoided crossing inside the window.

    Each predicted crossing is bracketed on a coarse grid and the gap
    minimum refined by bounded scalar minimization to ~1e-6 in time.
    """
    chirp = cfg.pulses[0].chirp
    if chirp.alpha == 0.0:
        raise ValueError("locate_crossings requires a nonzero chirp rate")
    t0, t1 = window
    if t1 <= t0:
        return []
    spacing = 2.0 / abs(chirp.alpha)
    found = []
    for n in range(-cfg.n_max, cfg.n_max):
        t_pred = _predicted_crossing_time(cfg, n)
        if t_pred is None or not (t0 <= t_pred <= t1):
            continue
        lo = max(t0, t_pred - 0.25 * spacing)
        hi = min(t1, t_pred + 0.25 * spacing)
        pair = (n, n + 1)
        res = minimize_scalar(
            lambda t: _pair_gap(cfg, pair, t), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-6},
        )
        amp = sum(p.envelope.amplitude(float(res.x)) for p in cfg.pulses)
        found.append((pair, float(res.x), float(res.fun), amp))
    found.sort(key=lambda r: r[1])
    records = []
    for i, (pair, t_cross, gap, amp) in enumerate(found):
        dt_next = found[i + 1][1] - t_cross if i + 1 < len(found) else spacing
        records.append(
            CrossingRecord(
                pair=pair, t_cross=t_cross, gap=gap,
                t_lz=amp / abs(chirp.alpha), dt_spacing=dt_next,
            )
        )
    return records


def adiabaticity_report(cfg: LadderConfig, window: Optional[Tuple[float, float]] = None):
    """Per-crossing table of (t_lz, dt_spacing, ratio), flagging ratio >= 1.

    The Landau-Zener transition time is Omega_e(t_cross)/alpha; sequential
    adiabatic transfer requires it to be shorter than the crossing spacing.
    """
    if window is None:
        window = (0.0, cfg.duration)
    rows = []
    for rec in locate_crossings(cfg, window):
        rows.append(
            {
                "pair": rec.pair,
                "t_cross": rec.t_cross,
                "gap": rec.gap,
                "t_lz": rec.t_lz,
                "dt_spacing": rec.dt_spacing,
                "ratio": rec.adiabaticity_ratio,
                "flagged": rec.adiabaticity_ratio >= 1.0,
            }
        )
    return rows


def adiabatic_track(
    cfg: LadderConfig,
    window: Tuple[float, float],
    level_index: int,
    n_samples: int = 0,
    overlap_threshold: float = 0.9,
    max_refinements: int = 4,
):
    """Follow one adiabatic eigenvalue through the window by eigenvector overlap.

    Branches are matched between successive samples by maximal overlap, not
    by sorted index, so the track follows the physical state through
    near-degeneracies.  Returns (times, eigenvalues, (n_start, n_end))
    where the labels are the dominant diabatic components at the window
    edges.
    """
    t0, t1 = window
    if not n_samples:
        chirp = cfg.pulses[0].chirp
        spacing = 2.0 / abs(chirp.alpha) if chirp.alpha else (t1 - t0)
        n_samples = max(200, int(40 * (t1 - t0) / spacing))
    scfg = _spectrum_config(cfg)

    for _ in range(max_refinements + 1):
        times = np.linspace(t0, t1, n_samples)
        vals0, vecs0 = instantaneous_spectrum(hamiltonian(scfg, times[0]), eigenvectors=True)
        idx = level_index
        track = [vals0[idx]]
        vec = vecs0[:, idx]
        start_label = int(np.argmax(np.abs(vec) ** 2)) - cfg.n_max
        ok = True
        for t in times[1:]:
            vals, vecs = instantaneous_spectrum(hamiltonian(scfg, float(t)), eigenvectors=True)
            overlaps = np.abs(vec.conj() @ vecs)
            j = int(np.argmax(overlaps))
            if overlaps[j] < overlap_threshold:
                ok = False
                break
            vec = vecs[:, j]
            track.append(vals[j])
        if ok:
            end_label = int(np.argmax(np.abs(vec) ** 2)) - cfg.n_max
            return times, np.asarray(track), (start_label, end_label)
        n_samples *= 2
    raise TrackingError(
        f"eigenvector overlap fell below {overlap_threshold} even at "
        f"{n_samples // 2} samples; window {window} may contain a true degeneracy"
    )
