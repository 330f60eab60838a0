"""Momentum-ladder model for a two-level atom in chirped standing-wave fields.

All quantities are expressed in recoil units: frequencies in units of the
two-photon recoil frequency w_k, times in units of 1/w_k, momenta in units
of hbar*k.  Momentum states are labelled by the integer n, with momentum
(2n + q)*hbar*k where q is a quasi-momentum offset (|q| <= 1).

The atom couples only to neighbouring momentum states, so the Hamiltonian
is tridiagonal in the ladder basis.  Two modes are supported:

* ``mirror``   -- a single chirped standing wave transfers population
  sequentially up (or down) one branch of the ladder.
* ``splitter`` -- two standing waves with opposite chirps drive both
  branches simultaneously, splitting the population between +n and -n.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Tuple

import numpy as np

__all__ = [
    "DEFAULT_CHIRP_SIGN",
    "PulseEnvelope",
    "ChirpProfile",
    "Pulse",
    "LadderConfig",
    "StateVector",
    "TridiagonalH",
    "quasi_energy",
    "mirror_hamiltonian",
    "splitter_couplings",
    "splitter_hamiltonian",
    "branch_quasi_energies",
    "hamiltonian",
]

# Sign convention for the chirp slope.  With the ladder phases chosen here,
# adjacent crossings on the positive branch sit at phidot = -(2n+1), so a
# *decreasing* phidot (sign = -1 with alpha > 0) climbs the positive branch
# forward in time.  The flag is exposed on ChirpProfile so the convention
# can be flipped without touching alpha; `braggsim.cli.selftest` verifies
# dynamically that alpha > 0 with the default sign transfers population
# upward.
DEFAULT_CHIRP_SIGN = -1

ENVELOPE_SHAPES = ("sin2", "linear")
MODES = ("mirror", "splitter")
FRAMES = ("bare", "rotating")


class ModeMismatchError(ValueError):
    """Raised when a mode-specific operation receives the wrong config."""


@dataclass(frozen=True)
class PulseEnvelope:
    """Dimensionless pulse shape with peak effective Rabi frequency.

    The envelope f(t) is zero until ``delay``, rises from 0 to 1 over
    ``ramp_up``, holds at 1 for ``plateau``, and falls back to 0 over
    ``ramp_down``.  ``peak`` is the peak effective two-photon Rabi
    frequency (units of w_k); the physical coupling is peak * f(t).
    """

    peak: float
    ramp_up: float
    plateau: float
    ramp_down: float
    shape: str = "sin2"
    delay: float = 0.0

    def __post_init__(self):
        if self.peak < 0.0:
            raise ValueError(f"peak Rabi frequency must be >= 0, got {self.peak}")
        for name in ("ramp_up", "plateau", "ramp_down", "delay"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.shape not in ENVELOPE_SHAPES:
            raise ValueError(f"unknown envelope shape {self.shape!r}")

    @property
    def duration(self) -> float:
        """End of the envelope support (support is [delay, duration])."""
        return self.delay + self.ramp_up + self.plateau + self.ramp_down

    def value(self, t: float) -> float:
        """Envelope f(t) in [0, 1]."""
        t = t - self.delay
        total = self.ramp_up + self.plateau + self.ramp_down
        if t <= 0.0 or t >= total:
            return 0.0
        if t < self.ramp_up:
            x = t / self.ramp_up
        elif t <= self.ramp_up + self.plateau:
            return 1.0
        else:
            x = (total - t) / self.ramp_down
        if self.shape == "sin2":
            return float(np.sin(0.5 * np.pi * x) ** 2)
        return float(x)

    def amplitude(self, t: float) -> float:
        """Effective Rabi frequency peak * f(t)."""
        return self.peak * self.value(t)


@dataclass(frozen=True)
class ChirpProfile:
    """Linear chirp of the two-photon detuning.

    phidot(t) = sign * alpha * (t - t_c) - delta0, and phi(t) is its exact
    antiderivative with phi(0) = 0.
    """

    alpha: float
    t_c: float
    delta0: float = 0.0
    sign: int = DEFAULT_CHIRP_SIGN

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")

    def rate(self, t):
        """phidot(t), affine in t."""
        return self.sign * self.alpha * (t - self.t_c) - self.delta0

    def phase(self, t):
        """phi(t) = integral of phidot from 0 to t (closed form)."""
        return self.sign * self.alpha * (0.5 * t * t - self.t_c * t) - self.delta0 * t

    def reversed(self) -> "ChirpProfile":
        """Same profile with the chirp rate negated."""
        return replace(self, alpha=-self.alpha)


@dataclass(frozen=True)
class Pulse:
    """One standing wave: envelope plus chirp schedule."""

    envelope: PulseEnvelope
    chirp: ChirpProfile


@dataclass(frozen=True)
class LadderConfig:
    """Full physical configuration of the truncated momentum ladder."""

    n_max: int
    mode: str
    pulses: Tuple[Pulse, ...]
    q: float = 0.0
    frame: str = "rotating"

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.frame not in FRAMES:
            raise ValueError(f"unknown frame {self.frame!r}")
        if abs(self.q) > 1.0:
            raise ValueError(f"|q| must be <= 1, got {self.q}")
        want = 1 if self.mode == "mirror" else 2
        if len(self.pulses) != want:
            raise ValueError(
                f"{self.mode} mode needs {want} pulse(s), got {len(self.pulses)}"
            )
        if self.mode == "splitter" and self.frame == "rotating":
            # Branch-dependent rotating frames are ambiguous for a single
            # amplitude vector; the splitter is propagated in the bare frame.
            raise ValueError("splitter mode supports only the bare frame")

    @property
    def dim(self) -> int:
        return 2 * self.n_max + 1

    @property
    def n_values(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    @property
    def duration(self) -> float:
        return max(p.envelope.duration for p in self.pulses)


@dataclass
class StateVector:
    """Complex amplitudes a_n for n = -N..N at a given time."""

    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.ndim != 1 or self.amplitudes.size % 2 == 0:
            raise ValueError("amplitudes must be a 1-d array of odd length")

    @classmethod
    def ground(cls, n_max: int, time: float = 0.0) -> "StateVector":
        """Default initial condition a_0 = 1."""
        amps = np.zeros(2 * n_max + 1, dtype=np.complex128)
        amps[n_max] = 1.0
        return cls(amps, time)

    @property
    def n_max(self) -> int:
        return (self.amplitudes.size - 1) // 2

    @property
    def n_values(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))


@dataclass(frozen=True)
class TridiagonalH:
    """Hermitian tridiagonal Hamiltonian on the ladder basis.

    ``diag[j]`` is the (real) diagonal element for the j-th basis state and
    ``offdiag[j]`` is the *lower* off-diagonal element H[j+1, j]; the upper
    element H[j, j+1] is its complex conjugate, so the matrix is Hermitian
    by construction.
    """

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=np.float64)
        e = np.asarray(self.offdiag, dtype=np.complex128)
        if e.size != d.size - 1:
            raise ValueError("offdiag must have length len(diag) - 1")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    @property
    def dim(self) -> int:
        return self.diag.size

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[1:] += self.offdiag * v[:-1]
        out[:-1] += np.conj(self.offdiag) * v[1:]
        return out

    def dense(self) -> np.ndarray:
        h = np.diag(self.diag.astype(np.complex128))
        idx = np.arange(self.dim - 1)
        h[idx + 1, idx] = self.offdiag
        h[idx, idx + 1] = np.conj(self.offdiag)
        return h


def quasi_energy(n, phidot, q=0.0):
    """Rotating-frame diagonal energy of ladder state n (units of w_k).

    Kinetic term (2n+q)^2/4 plus the n-photon dressing term n*phidot; at
    q = 0 this reduces to n^2 + n*phidot.
    """
    n = np.asarray(n, dtype=np.float64)
    return 0.25 * (2.0 * n + q) ** 2 + n * phidot


def mirror_hamiltonian(cfg: LadderConfig, t: float) -> TridiagonalH:
    """Tridiagonal Hamiltonian for the single-chirp (mirror) mode.

    Rotating frame: diag carries the quasi-energies and the coupling is the
    real effective Rabi frequency -Omega_e(t).  Bare frame: diag is purely
    kinetic and the lower coupling is -Omega_e(t)*exp(i*phi(t)).
    """
    if cfg.mode != "mirror":
        raise ModeMismatchError(f"mirror_hamiltonian needs mirror mode, got {cfg.mode}")
    pulse = cfg.pulses[0]
    n = cfg.n_values
    omega = pulse.envelope.amplitude(t)
    if cfg.frame == "rotating":
        diag = quasi_energy(n, pulse.chirp.rate(t), cfg.q)
        off = np.full(cfg.dim - 1, -omega, dtype=np.complex128)
    else:
        diag = quasi_energy(n, 0.0, cfg.q)
        off = np.full(
            cfg.dim - 1, -omega * np.exp(1j * pulse.chirp.phase(t)), dtype=np.complex128
        )
    return TridiagonalH(diag, off)


def _splitter_fields(cfg: LadderConfig, t: float):
    """Per-field effective Rabi amplitudes and phases at time t."""
    p1, p2 = cfg.pulses
    return (
        p1.envelope.amplitude(t),
        p2.envelope.amplitude(t),
        p1.chirp.phase(t),
        p2.chirp.phase(t),
    )


def splitter_couplings(cfg: LadderConfig, t: float):
    """Branch couplings (Omega_minus, Omega_plus) for the splitter.

    Omega_minus = A+ + A- * exp(-i*d23), Omega_plus = A+ * exp(i*d23) + A-,
    where d23(t) = phi2(t) - phi1(t) is the accumulated phase difference of
    the two chirps.
    """
    if cfg.mode != "splitter":
        raise ModeMismatchError(f"splitter_couplings needs splitter mode, got {cfg.mode}")
    a_plus, a_minus, phi1, phi2 = _splitter_fields(cfg, t)
    d23 = phi2 - phi1
    omega_minus = a_plus + a_minus * np.exp(-1j * d23)
    omega_plus = a_plus * np.exp(1j * d23) + a_minus
    return omega_minus, omega_plus


def bare_coupling(cfg: LadderConfig, t: float) -> complex:
    """Total bare-frame coupling Omega_e(t) between adjacent ladder states."""
    if cfg.mode == "mirror":
        pulse = cfg.pulses[0]
        return pulse.envelope.amplitude(t) * np.exp(1j * pulse.chirp.phase(t))
    a_plus, a_minus, phi1, phi2 = _splitter_fields(cfg, t)
    return a_plus * np.exp(1j * phi1) + a_minus * np.exp(1j * phi2)


def splitter_hamiltonian(cfg: LadderConfig, t: float) -> TridiagonalH:
    """Bare-frame tridiagonal Hamiltonian for the two-chirp (splitter) mode."""
    if cfg.mode != "splitter":
        raise ModeMismatchError(f"splitter_hamiltonian needs splitter mode, got {cfg.mode}")
    diag = quasi_energy(cfg.n_values, 0.0, cfg.q)
    off = np.full(cfg.dim - 1, -bare_coupling(cfg, t), dtype=np.complex128)
    return TridiagonalH(diag, off)


def branch_quasi_energies(cfg: LadderConfig, t: float):
    """Diagnostic rotating-frame energies of the two splitter branches.

    Returns (E via chirp 1, E via chirp 2) as arrays over n; the positive
    branch is governed by the first chirp and the negative branch by the
    second.
    """
    if cfg.mode != "splitter":
        raise ModeMismatchError("branch_quasi_energies needs splitter mode")
    n = cfg.n_values
    return (
        quasi_energy(n, cfg.pulses[0].chirp.rate(t), cfg.q),
        quasi_energy(n, cfg.pulses[1].chirp.rate(t), cfg.q),
    )


def hamiltonian(cfg: LadderConfig, t: float) -> TridiagonalH:
    """Assemble the ladder Hamiltonian for either mode at time t."""
    if cfg.mode == "mirror":
        return mirror_hamiltonian(cfg, t)
    return splitter_hamiltonian(cfg, t)
