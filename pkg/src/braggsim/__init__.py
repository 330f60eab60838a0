"""Chirped standing-wave Bragg ladder simulator.

Simulates momentum transfer to two-level atoms from frequency-chirped
standing-wave fields: sequential Bragg resonances realize atom mirrors
(transfer to one momentum branch) and 50/50 beam splitters (coherent
splitting between both branches), with dressed-state and adiabaticity
diagnostics.
"""

from .ladder import (
    DEFAULT_CHIRP_SIGN,
    ChirpProfile,
    LadderConfig,
    Pulse,
    PulseEnvelope,
    StateVector,
    TridiagonalH,
    hamiltonian,
    mirror_hamiltonian,
    quasi_energy,
    splitter_couplings,
    splitter_hamiltonian,
)
from .observables import (
    SummaryMetrics,
    bloch_period,
    mean_velocity,
    populations,
    transfer_fidelity,
)
from .propagate import IntegratorSpec, Trajectory, frame_transform, propagate, step
from .scenarios import (
    BLOCH_PRESETS,
    BlochParams,
    LabUnits,
    MirrorParams,
    ScanResult,
    SplitterParams,
    calibrate,
    convert_units,
    critical_spread,
    q_spread_scan,
    run_bloch,
    run_mirror,
    run_splitter,
)
from .spectrum import (
    CrossingRecord,
    adiabatic_track,
    adiabaticity_report,
    instantaneous_spectrum,
    locate_crossings,
)

__version__ = "0.1.0"
