"""Config parsing, scenario dispatch and stable result serialization.

Config files use a flat ``key = value`` schema, one per line, ``#``
comments allowed.  All quantities in files are recoil-scaled; SI units
appear only in the ``units`` subcommand output.  Trajectories are written
as CSV (12 significant digits), summaries as JSON embedding the full
config snapshot, so identical configs reproduce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import warnings
from dataclasses import asdict, dataclass, fields
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import scenarios, spectrum as spectrum_mod
from .ladder import (DEFAULT_CHIRP_SIGN, ENVELOPE_SHAPES, LadderConfig,
                     StateVector)
from .observables import NoPeriodError, SummaryMetrics, bloch_period
from .propagate import IntegratorSpec, Trajectory, propagate
from .scenarios import (BlochParams, LabUnits, MirrorParams, SplitterParams,
                        convert_units, run_mirror, run_splitter)

__all__ = [
    "SimConfig",
    "ConfigError",
    "parse_config",
    "emit_config",
    "emit_trajectory",
    "emit_summary",
    "bundled_config_text",
    "cli_dispatch",
    "main",
]


class ConfigError(ValueError):
    """Invalid configuration; ``violations`` lists every problem found."""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class SimConfig:
    """Validated, recoil-scaled simulation configuration."""

    mode: str
    target: int
    alpha: float
    t_c: float
    omega0: float
    ramp_up: float
    ramp_down: float
    plateau: Optional[float] = None
    delay: Optional[float] = None
    delta0: float = 0.0
    delta0_prime: float = 0.0
    n_max: Optional[int] = None
    q: float = 0.0
    sigma_q: float = 0.0
    frame: Optional[str] = None
    shape: str = "sin2"
    sign: int = DEFAULT_CHIRP_SIGN
    dt: float = 1e-3
    record_stride: int = 200
    trajectory_out: str = "trajectory.csv"
    summary_out: str = "summary.json"

    def params(self):
        """Scenario parameter object for this config."""
        common = dict(
            target=self.target, alpha=self.alpha, t_c=self.t_c,
            delta0=self.delta0, omega0=self.omega0, ramp_up=self.ramp_up,
            ramp_down=self.ramp_down, plateau=self.plateau, q=self.q,
            n_max=self.n_max, dt=self.dt, record_stride=self.record_stride,
            shape=self.shape, sign=self.sign,
        )
        if self.mode == "mirror":
            return MirrorParams(frame=self.frame or "rotating", **common)
        return SplitterParams(
            delta0_prime=self.delta0_prime, delay=self.delay, **common
        )


_REQUIRED = ("mode", "target", "alpha", "t_c", "omega0", "ramp_up", "ramp_down")
_INT_KEYS = {"target", "n_max", "sign", "record_stride"}
_FLOAT_KEYS = {
    "alpha", "t_c", "omega0", "ramp_up", "ramp_down", "plateau", "delay",
    "delta0", "delta0_prime", "q", "sigma_q", "dt",
}
_STR_KEYS = {"mode", "frame", "shape", "trajectory_out", "summary_out"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS


def parse_config(text: str) -> SimConfig:
    """Parse and fully validate a key-value config; reports all violations."""
    violations: List[str] = []
    raw: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            violations.append(f"line {lineno}: expected 'key = value', got {stripped!r}")
            continue
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in _ALL_KEYS:
            violations.append(f"unknown key {key!r}")
            continue
        if key in raw:
            violations.append(f"duplicate key {key!r}")
        raw[key] = value

    for key in _REQUIRED:
        if key not in raw:
            violations.append(f"missing required key {key!r}")

    values: Dict[str, object] = {}
    for key, value in raw.items():
        try:
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            else:
                values[key] = value
        except ValueError:
            violations.append(f"key {key!r}: cannot parse {value!r}")

    def check(cond: bool, message: str):
        if not cond:
            violations.append(message)

    if "mode" in values:
        check(values["mode"] in ("mirror", "splitter"),
              f"mode must be 'mirror' or 'splitter', got {values['mode']!r}")
    if "target" in values:
        check(values["target"] != 0, "target must be a nonzero level")
    if "alpha" in values:
        check(values["alpha"] != 0.0, "chirp rate must be nonzero")
    if "omega0" in values:
        check(values["omega0"] >= 0.0, "omega0 must be >= 0")
    for key in ("ramp_up", "ramp_down", "plateau", "delay"):
        if key in values and values[key] is not None:
            check(values[key] >= 0.0, f"{key} must be >= 0")
    if "delay" in values:
        check(values.get("mode") == "splitter",
              "delay applies to splitter mode only")
    if "dt" in values:
        check(values["dt"] > 0.0, "dt must be > 0")
    if "record_stride" in values:
        check(values["record_stride"] >= 1, "record_stride must be >= 1")
    if "q" in values:
        check(abs(values["q"]) <= 1.0, "q must satisfy |q| <= 1")
    if "sigma_q" in values:
        check(values["sigma_q"] >= 0.0, "sigma_q must be >= 0")
    if "n_max" in values:
        check(values["n_max"] >= 1, "n_max must be >= 1")
    if "sign" in values:
        check(values["sign"] in (-1, 1), "sign must be +1 or -1")
    if "shape" in values:
        check(values["shape"] in ENVELOPE_SHAPES,
              f"shape must be one of {ENVELOPE_SHAPES}")
    if "frame" in values:
        check(values["frame"] in ("bare", "rotating"),
              f"frame must be 'bare' or 'rotating', got {values['frame']!r}")
        if values.get("mode") == "splitter":
            check(values["frame"] == "bare", "splitter mode requires the bare frame")

    if violations:
        raise ConfigError(violations)
    return SimConfig(**values)  # type: ignore[arg-type]


def emit_config(cfg: SimConfig) -> str:
    """Serialize a SimConfig so that parse_config round-trips it exactly."""
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"


def _atomic_write(path: str, data: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"cannot write {path!r}: {exc}") from exc


def emit_trajectory(traj: Trajectory, path: str) -> None:
    """CSV: t, P_{-N}..P_{+N}, v_mean, norm with 12 significant digits."""
    n_max = (traj.populations.shape[1] - 1) // 2
    header = ["t"] + [f"P_{n}" for n in range(-n_max, n_max + 1)] + ["v_mean", "norm"]
    rows = [",".join(header)]
    for i in range(traj.times.size):
        cells = [f"{traj.times[i]:.12g}"]
        cells += [f"{p:.12g}" for p in traj.populations[i]]
        cells.append(f"{traj.mean_velocity[i]:.12g}")
        cells.append(f"{traj.norms[i]:.12g}")
        rows.append(",".join(cells))
    _atomic_write(path, "\n".join(rows) + "\n")


def _metrics_dict(metrics: SummaryMetrics) -> Dict:
    n_max = (metrics.final_populations.size - 1) // 2
    return {
        "fidelity": metrics.fidelity,
        "residual_low": metrics.residual_low,
        "targets": list(metrics.targets),
        "asymmetry": metrics.asymmetry(),
        "bloch_period": metrics.bloch_period,
        "final_populations": {
            str(n): float(metrics.final_populations[n + n_max])
            for n in range(-n_max, n_max + 1)
        },
        "max_transient": {
            str(n): float(metrics.max_transient[n + n_max])
            for n in range(-n_max, n_max + 1)
        },
    }


def emit_summary(metrics: SummaryMetrics, path: str, config: Optional[SimConfig] = None) -> None:
    """JSON summary embedding the config snapshot that produced it."""
    doc = {
        "config": asdict(config) if config is not None else None,
        "metrics": _metrics_dict(metrics),
    }
    _atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def bundled_config_text(name: str) -> str:
    """Text of a reference config shipped with the package."""
    ref = resources.files("braggsim").joinpath("configs", name)
    return ref.read_text()


def _load_config(path: str) -> SimConfig:
    p = Path(path)
    if not p.exists():
        candidate = None
        try:
            candidate = bundled_config_text(path)
        except (FileNotFoundError, TypeError):
            pass
        if candidate is None:
            raise FileNotFoundError(f"config file not found: {path}")
        return parse_config(candidate)
    return parse_config(p.read_text())


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    params = cfg.params()
    runner = run_mirror if cfg.mode == "mirror" else run_splitter
    traj, metrics = runner(params)
    try:
        metrics.bloch_period = bloch_period(traj.times, traj.mean_velocity)
    except NoPeriodError:
        metrics.bloch_period = None
    out_traj = args.trajectory or cfg.trajectory_out
    out_summary = args.summary or cfg.summary_out
    emit_trajectory(traj, out_traj)
    emit_summary(metrics, out_summary, cfg)
    print(f"wrote {out_traj} and {out_summary} "
          f"(fidelity {metrics.fidelity:.6f}, norm {traj.norms[-1]:.12f})")
    return 0


def _cmd_spectrum(args) -> int:
    cfg = _load_config(args.config)
    ladder = cfg.params().config()
    t0 = args.t0 if args.t0 is not None else 0.0
    t1 = args.t1 if args.t1 is not None else ladder.duration
    times = np.linspace(t0, t1, args.samples)
    from .ladder import hamiltonian

    rows = ["t," + ",".join(f"E_{i}" for i in range(ladder.dim))]
    for t in times:
        vals = spectrum_mod.instantaneous_spectrum(hamiltonian(ladder, float(t)))
        rows.append(f"{t:.12g}," + ",".join(f"{v:.12g}" for v in vals))
    _atomic_write(args.out, "\n".join(rows) + "\n")
    print(f"wrote {args.out} ({args.samples} samples, dim {ladder.dim})")
    return 0


def _cmd_crossings(args) -> int:
    cfg = _load_config(args.config)
    ladder = cfg.params().config()
    records = spectrum_mod.locate_crossings(ladder, (0.0, ladder.duration))
    rows = ["n,n_next,t_cross,gap,t_lz,dt_spacing,ratio"]
    for r in records:
        rows.append(
            f"{r.pair[0]},{r.pair[1]},{r.t_cross:.12g},{r.gap:.12g},"
            f"{r.t_lz:.12g},{r.dt_spacing:.12g},{r.adiabaticity_ratio:.12g}"
        )
    _atomic_write(args.out, "\n".join(rows) + "\n")
    print(f"wrote {args.out} ({len(records)} crossings)")
    return 0


def _cmd_scan(args) -> int:
    cfg = _load_config(args.config)
    values = [float(v) for v in args.values.split(",")]
    if args.param == "sigma_q":
        result = scenarios.q_spread_scan(cfg.params(), values, grid_size=args.grid_size)
    else:
        result = scenarios.parameter_scan(cfg.params(), args.param, values)
    doc = {
        "parameter": result.parameter,
        "values": list(result.values),
        "fidelities": [m.fidelity for m in result.metrics],
        "residual_low": [m.residual_low for m in result.metrics],
        "provenance": {
            k: v for k, v in result.provenance.items() if not isinstance(v, dict)
        },
    }
    _atomic_write(args.out, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"wrote {args.out} ({len(values)} points)")
    return 0


def _cmd_calibrate(args) -> int:
    cfg = _load_config(args.config)
    params = cfg.params()
    if not isinstance(params, MirrorParams):
        raise ConfigError(["calibrate supports mirror-mode configs only"])
    omega0, ramp_up, ramp_down = scenarios.calibrate(
        target_fidelity=args.target_fidelity, base=params,
    )
    print(f"omega0 = {omega0:.4f}")
    print(f"ramp_up = {ramp_up:.2f}")
    print(f"ramp_down = {ramp_down:.2f}")
    return 0


def _cmd_units(args) -> int:
    sheet = convert_units(
        LabUnits(args.omega_k_hz), args.n, args.alpha,
        durations={"total": args.total} if args.total else None,
    )
    span_mhz = sheet["span_hz"] / 1e6
    chirp_khz_us = sheet["chirp_hz_per_s"] / 1e9
    print(f"recoil frequency: {args.omega_k_hz / 1e3:.6g} kHz")
    print(f"frequency span (2n * omega_k/2pi): {span_mhz:.6g} MHz")
    print(f"chirp rate: {chirp_khz_us:.6g} kHz/us")
    if args.total:
        print(f"total duration: {sheet['total_s'] * 1e3:.6g} ms")
    return 0


def selftest() -> List[str]:
    """Chirp-sign startup check plus a small invariant subset.

    Returns a list of failure messages (empty on success).  The sign check
    propagates a short ladder through its first crossing and requires that
    a positive chirp rate with the default sign convention climbs the
    positive branch.
    """
    failures = []
    params = MirrorParams(
        target=2, alpha=0.1, t_c=10.0, omega0=0.7, ramp_up=16.0, ramp_down=14.0,
        n_max=7, record_stride=50,
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        traj, metrics = run_mirror(params)
    if metrics.population(+2) < 0.9:
        failures.append(
            f"chirp-sign check: positive alpha moved P(+2) to only "
            f"{metrics.population(+2):.3f}; sign convention broken"
        )
    if abs(traj.norms[-1] - 1.0) > 1e-9:
        failures.append(f"norm drifted to {traj.norms[-1]!r}")
    ladder = params.config()
    from .ladder import hamiltonian

    h = hamiltonian(ladder, 15.0).dense()
    if not np.allclose(h, h.conj().T, atol=0.0):
        failures.append("Hamiltonian is not Hermitian")
    return failures


def _cmd_selftest(_args) -> int:
    failures = selftest()
    if failures:
        for f in failures:
            print(f"FAIL: {f}", file=sys.stderr)
        return 1
    print("selftest passed: chirp-sign convention, norm conservation, hermiticity")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="braggsim",
        description="Chirped standing-wave Bragg ladder simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a config, emit trajectory + summary")
    p.add_argument("config", help="config file path or bundled name (e.g. fig2.cfg)")
    p.add_argument("--trajectory", help="override trajectory CSV path")
    p.add_argument("--summary", help="override summary JSON path")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("spectrum", help="emit instantaneous eigenvalue table")
    p.add_argument("config")
    p.add_argument("--t0", type=float)
    p.add_argument("--t1", type=float)
    p.add_argument("--samples", type=int, default=400)
    p.add_argument("--out", default="spectrum.csv")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("crossings", help="emit avoided-crossing table")
    p.add_argument("config")
    p.add_argument("--out", default="crossings.csv")
    p.set_defaults(func=_cmd_crossings)

    p = sub.add_parser("scan", help="sweep one named parameter")
    p.add_argument("config")
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--grid-size", type=int, default=21)
    p.add_argument("--out", default="scan.json")
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("calibrate", help="grid-search pulse parameters")
    p.add_argument("config")
    p.add_argument("--target-fidelity", type=float, default=0.99)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("units", help="print the SI parameter sheet")
    p.add_argument("--omega-k-hz", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--total", type=float, help="total duration in recoil units")
    p.set_defaults(func=_cmd_units)

    p = sub.add_parser("selftest", help="chirp-sign and invariant checks")
    p.set_defaults(func=_cmd_selftest)
    return parser


def cli_dispatch(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand; returns the process exit status."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, OSError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_dispatch())
