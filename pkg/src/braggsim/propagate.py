"""Time integration of the ladder Schroedinger equation.

The default integrator is fixed-step RK4 applied to interaction-picture
amplitudes: the diagonal (kinetic) phases are known in closed form and are
factored out exactly, so the integrated system is driven only by the
pulse coupling.  This keeps the stability constraint tied to the coupling
strength instead of the full spectral radius of H, which grows like
n_max^2.  A direct Schroedinger-picture path (``exact_diagonal=False``)
and an adaptive integrator are available for cross-checks.

Populations are frame-independent; recorded amplitudes are reported in the
frame requested by the LadderConfig.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from . import kernels
from .ladder import LadderConfig, StateVector, TridiagonalH, hamiltonian

__all__ = [
    "IntegratorSpec",
    "Trajectory",
    "PropagationError",
    "StabilityError",
    "TruncationWarning",
    "step",
    "propagate",
    "frame_transform",
]

# Fixed-step stability rule: dt times the spectral radius of the matrix the
# integrator actually sees must stay below this bound.
STABILITY_LIMIT = 0.05
NORM_TOL = 1e-9
EDGE_POP_TOL = 1e-8


class PropagationError(RuntimeError):
    """Norm drift or other integration failure."""


class StabilityError(ValueError):
    """Configured time step violates the stability rule."""


class TruncationWarning(UserWarning):
    """Population reached the edge of the truncated ladder."""


@dataclass(frozen=True)
class IntegratorSpec:
    """How to integrate: fixed-step RK4 or adaptive RK.

    ``exact_diagonal`` selects the interaction-picture path (diagonal
    phases handled analytically); disabling it integrates the requested
    frame directly, which demands a far smaller dt.
    """

    method: str = "rk4-fixed"
    dt: float = 1e-3
    tolerance: float = 1e-10
    record_stride: int = 100
    exact_diagonal: bool = True

    def __post_init__(self):
        if self.method not in ("rk4-fixed", "rk-adaptive"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.dt <= 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.record_stride < 1:
            raise ValueError(f"record_stride must be >= 1, got {self.record_stride}")


@dataclass
class Trajectory:
    """Recorded time series of a single propagation."""

    times: np.ndarray
    populations: np.ndarray  # shape (n_records, 2*n_max + 1)
    norms: np.ndarray
    mean_velocity: np.ndarray
    n_values: np.ndarray
    frame: str
    amplitudes: Optional[np.ndarray] = None  # complex, frame amplitudes

    @property
    def final_populations(self) -> np.ndarray:
        return self.populations[-1]

    @property
    def final_state(self) -> StateVector:
        if self.amplitudes is None:
            raise ValueError("trajectory was recorded without amplitudes")
        return StateVector(self.amplitudes[-1].copy(), float(self.times[-1]))

    def population(self, n: int) -> np.ndarray:
        """Time series of P_n."""
        idx = int(n) + (self.populations.shape[1] - 1) // 2
        return self.populations[:, idx]


def _spectral_radius_bound(cfg: LadderConfig, spec: IntegratorSpec, t_span) -> float:
    """Gershgorin bound on the spectral radius of the integrated system."""
    peak = sum(p.envelope.peak for p in cfg.pulses)
    if spec.exact_diagonal:
        return 2.0 * peak
    ts = np.linspace(t_span[0], t_span[1], 512)
    worst = 0.0
    for t in ts:
        h = hamiltonian(cfg, float(t))
        row = np.abs(h.diag).astype(float)
        row[1:] += np.abs(h.offdiag)
        row[:-1] += np.abs(h.offdiag)
        worst = max(worst, float(row.max()))
    return worst


def step(state: StateVector, h_of_t: Callable[[float], TridiagonalH], t: float, dt: float) -> StateVector:
    """One classical RK4 step of i*da/dt = H(t)*a using tridiagonal matvecs."""
    y = state.amplitudes
    k1 = -1j * h_of_t(t).matvec(y)
    h_mid = h_of_t(t + 0.5 * dt)
    k2 = -1j * h_mid.matvec(y + 0.5 * dt * k1)
    k3 = -1j * h_mid.matvec(y + 0.5 * dt * k2)
    k4 = -1j * h_of_t(t + dt).matvec(y + dt * k3)
    out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    drift = abs(float(np.sum(np.abs(out) ** 2)) - state.norm())
    if drift > 1e-6:
        raise PropagationError(
            f"norm drifted by {drift:.2e} in a single step at t={t}; reduce dt"
        )
    return StateVector(out, t + dt)


def _ip_phases(cfg: LadderConfig, t: float) -> np.ndarray:
    """Accumulated diagonal phases Theta_n(t) removed by the IP kernel."""
    n = cfg.n_values
    return 0.25 * (2.0 * n + cfg.q) ** 2 * t


def _to_frame(cfg: LadderConfig, times: np.ndarray, amps_ip: np.ndarray) -> np.ndarray:
    """Convert interaction-picture records to bare or rotating amplitudes."""
    n = cfg.n_values
    out = np.empty_like(amps_ip)
    for k, t in enumerate(times):
        bare = amps_ip[k] * np.exp(-1j * _ip_phases(cfg, float(t)))
        if cfg.frame == "rotating":
            phi = cfg.pulses[0].chirp.phase(float(t))
            out[k] = bare * np.exp(-1j * n * phi)
        else:
            out[k] = bare
    return out


def _from_initial(cfg: LadderConfig, initial: Optional[StateVector], t0: float) -> np.ndarray:
    if initial is None:
        initial = StateVector.ground(cfg.n_max, t0)
    if initial.amplitudes.size != cfg.dim:
        raise ValueError(
            f"initial state has {initial.amplitudes.size} amplitudes, config needs {cfg.dim}"
        )
    return initial.amplitudes.astype(np.complex128).copy()


def propagate(
    cfg: LadderConfig,
    spec: IntegratorSpec,
    t_span: Tuple[float, float],
    initial: Optional[StateVector] = None,
    record_amplitudes: bool = False,
) -> Trajectory:
    """Integrate the ladder dynamics over t_span and record a Trajectory."""
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 <= t0:
        raise ValueError(f"empty time span {t_span}")

    if spec.method == "rk-adaptive":
        return _propagate_adaptive(cfg, spec, (t0, t1), initial, record_amplitudes)

    rho = _spectral_radius_bound(cfg, spec, (t0, t1))
    if spec.dt * rho > STABILITY_LIMIT:
        raise StabilityError(
            f"dt={spec.dt} violates the stability rule: dt*rho = {spec.dt * rho:.3g} "
            f"> {STABILITY_LIMIT} (rho ~ {rho:.3g}); reduce dt"
        )

    nsteps = max(1, int(round((t1 - t0) / spec.dt)))
    dt = (t1 - t0) / nsteps
    params = kernels.pack_params(cfg)

    y0 = _from_initial(cfg, initial, t0)
    if spec.exact_diagonal:
        # Kernel state is interaction-picture: y_n = c_n exp(i*kin_n*t),
        # with c_n the bare amplitudes.  Convert the initial state in.
        bare = y0
        if cfg.frame == "rotating":
            phi = cfg.pulses[0].chirp.phase(t0)
            bare = y0 * np.exp(1j * cfg.n_values * phi)
        y = bare * np.exp(1j * _ip_phases(cfg, t0))
    else:
        y = y0

    status, times, pops, norms, vmean, amps = kernels._propagate(
        y, t0, dt, nsteps, spec.record_stride, params,
        spec.exact_diagonal, 1 if cfg.frame == "rotating" else 0,
        record_amplitudes,
    )
    if status == kernels.STATUS_NORM_DRIFT:
        raise PropagationError(
            f"norm drifted beyond 1e-6 near t={times[-1]:.4g}; integration unstable"
        )
    if abs(norms[-1] - norms[0]) > NORM_TOL:
        raise PropagationError(
            f"norm deviated by {abs(norms[-1] - norms[0]):.3e} over the trajectory"
        )
    edge = max(pops[-1, 0], pops[-1, -1])
    if edge > EDGE_POP_TOL:
        warnings.warn(
            f"final edge population {edge:.3e} exceeds {EDGE_POP_TOL}; "
            f"increase n_max", TruncationWarning,
        )

    amplitudes = None
    if record_amplitudes:
        amplitudes = _to_frame(cfg, times, amps) if spec.exact_diagonal else amps
    return Trajectory(
        times=times, populations=pops, norms=norms, mean_velocity=vmean,
        n_values=cfg.n_values, frame=cfg.frame, amplitudes=amplitudes,
    )


def _propagate_adaptive(cfg, spec, t_span, initial, record_amplitudes):
    """Adaptive RK on the interaction-picture RHS via scipy's solve_ivp."""
    from scipy.integrate import solve_ivp

    from .kernels import _bare_coupling, _deriv_ip, pack_params

    t0, t1 = t_span
    params = pack_params(cfg)
    y0 = _from_initial(cfg, initial, t0)
    if cfg.frame == "rotating":
        y0 = y0 * np.exp(1j * cfg.n_values * cfg.pulses[0].chirp.phase(t0))
    y0 = y0 * np.exp(1j * _ip_phases(cfg, t0))
    out = np.empty_like(y0)

    def rhs(t, y):
        _deriv_ip(out, y.astype(np.complex128), t, cfg.q, _bare_coupling(t, params))
        return out.copy()

    n_eval = max(64, int((t1 - t0) / (spec.dt * spec.record_stride)) + 1)
    t_eval = np.linspace(t0, t1, n_eval)
    sol = solve_ivp(
        rhs, (t0, t1), y0, method="DOP853", t_eval=t_eval,
        rtol=spec.tolerance, atol=spec.tolerance,
    )
    if not sol.success:
        raise PropagationError(f"adaptive integration failed: {sol.message}")
    amps_ip = sol.y.T
    pops = np.abs(amps_ip) ** 2
    norms = pops.sum(axis=1)
    vmean = pops @ cfg.n_values + 0.5 * cfg.q * norms
    amplitudes = _to_frame(cfg, sol.t, amps_ip) if record_amplitudes else None
    return Trajectory(
        times=sol.t, populations=pops, norms=norms, mean_velocity=vmean,
        n_values=cfg.n_values, frame=cfg.frame, amplitudes=amplitudes,
    )


def frame_transform(state: StateVector, phi: float, direction: str = "forward") -> StateVector:
    """Multiply amplitudes by exp(+/- i*n*phi); populations are unchanged."""
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    s = 1.0 if direction == "forward" else -1.0
    n = state.n_values
    return StateVector(state.amplitudes * np.exp(1j * s * n * phi), state.time)
