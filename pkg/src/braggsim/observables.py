"""Reductions from states and trajectories to measurable quantities."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from .ladder import StateVector
from .propagate import Trajectory

__all__ = [
    "SummaryMetrics",
    "NoPeriodError",
    "populations",
    "mean_velocity",
    "bloch_period",
    "oscillation_amplitude",
    "transfer_fidelity",
]


class NoPeriodError(ValueError):
    """Velocity series contains too few oscillation cycles."""


@dataclass
class SummaryMetrics:
    """Headline numbers extracted from one trajectory."""

    final_populations: np.ndarray
    n_values: np.ndarray
    fidelity: float
    residual_low: float
    max_transient: np.ndarray  # per-level maxima over the full record
    targets: Tuple[int, ...]
    bloch_period: Optional[float] = None

    def population(self, n: int) -> float:
        idx = int(n) + (self.final_populations.size - 1) // 2
        return float(self.final_populations[idx])

    def max_transient_of(self, n: int) -> float:
        idx = int(n) + (self.max_transient.size - 1) // 2
        return float(self.max_transient[idx])

    def asymmetry(self) -> float:
        """|P_{+n} - P_{-n}| summed over target magnitudes."""
        mags = sorted({abs(t) for t in self.targets})
        return float(sum(abs(self.population(m) - self.population(-m)) for m in mags))


def populations(state: StateVector) -> np.ndarray:
    """Per-n probabilities |a_n|^2."""
    return np.abs(state.amplitudes) ** 2


def mean_velocity(state: StateVector, q: float = 0.0) -> float:
    """Mean velocity in units of 2*hbar*k/m: sum_n n*P_n (+ q/2 offset)."""
    p = populations(state)
    return float(p @ state.n_values + 0.5 * q * p.sum())


def _zero_crossings(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Linearly interpolated zero-crossing times of a sampled series."""
    s = np.sign(values)
    # Treat exact zeros as belonging to the following sign change.
    nz = np.nonzero(s)[0]
    if nz.size < 2:
        return np.empty(0)
    idx = nz[:-1][s[nz[:-1]] != s[nz[1:]]]
    nxt = nz[1:][s[nz[:-1]] != s[nz[1:]]]
    t0, t1 = times[idx], times[nxt]
    v0, v1 = values[idx], values[nxt]
    return t0 - v0 * (t1 - t0) / (v1 - v0)


def _detrended(times: np.ndarray, velocities: np.ndarray) -> np.ndarray:
    coeff = np.polyfit(times, velocities, 1)
    return velocities - np.polyval(coeff, times)


def bloch_period(times: np.ndarray, velocities: np.ndarray) -> float:
    """Oscillation period from the linearly detrended velocity series.

    The period is twice the mean spacing of the zero crossings of the
    detrended signal.  Raises NoPeriodError for fewer than 3 crossings.
    """
    times = np.asarray(times, dtype=float)
    velocities = np.asarray(velocities, dtype=float)
    if times.size != velocities.size or times.size < 4:
        raise NoPeriodError("need matching series with at least 4 samples")
    resid = _detrended(times, velocities)
    if np.allclose(resid, 0.0, atol=1e-12):
        raise NoPeriodError("velocity series has no oscillation about its trend")
    crossings = _zero_crossings(times, resid)
    if crossings.size < 3:
        raise NoPeriodError(
            f"only {crossings.size} zero crossings found; need at least 3"
        )
    return 2.0 * float(np.mean(np.diff(crossings)))


def oscillation_amplitude(times: np.ndarray, velocities: np.ndarray) -> float:
    """RMS amplitude of the detrended velocity oscillation."""
    resid = _detrended(np.asarray(times, float), np.asarray(velocities, float))
    return float(np.sqrt(np.mean(resid**2)))


def transfer_fidelity(
    traj: Trajectory,
    targets: Iterable[int],
    with_period: bool = False,
) -> SummaryMetrics:
    """Final-state fidelity on the target levels plus transient diagnostics.

    ``residual_low`` is the final probability left in levels with
    |n| < min |target|; ``max_transient`` holds per-level maxima over the
    whole record.
    """
    targets = tuple(int(t) for t in targets)
    if not targets:
        raise ValueError("need at least one target level")
    final = traj.final_populations
    n = traj.n_values
    n_max = (final.size - 1) // 2
    if any(abs(t) > n_max for t in targets):
        raise ValueError(f"targets {targets} outside ladder |n| <= {n_max}")
    fidelity = float(sum(final[t + n_max] for t in targets))
    low_cut = min(abs(t) for t in targets)
    residual_low = float(final[np.abs(n) < low_cut].sum())
    period = None
    if with_period:
        period = bloch_period(traj.times, traj.mean_velocity)
    return SummaryMetrics(
        final_populations=final.copy(),
        n_values=n.copy(),
        fidelity=fidelity,
        residual_low=residual_low,
        max_transient=traj.populations.max(axis=0),
        targets=targets,
        bloch_period=period,
    )
