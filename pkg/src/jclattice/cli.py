"""Command-line entry point.

    jclattice <experiment> [--config file.json] [--out DIR] [--set key=value ...]

Configuration frequencies are in Hz and converted to rad/s on entry.  Exit
status is 0 on success, 2 for configuration errors and 3 for numerical
failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import IntegrationError, PositivityError, adiabatic_ramp
from .hilbert import build_basis
from .model import SystemParams, build_bose_hubbard, build_lattice_hamiltonian
from .protocol import (
    bose_hubbard_params,
    compensation_curve,
    run_protocol,
    sweep_fidelity_vs_epsilon,
    sweep_fidelity_vs_u,
)
from .reports import SPECTRUM_COLUMNS, spectrum_rows, trajectory_rows, write_csv, write_manifest
from .spectrum import AmbiguousStateError, degeneracy_profile, identify_named_states, photon_pair_state

EXPERIMENTS = ("spectrum", "degeneracy", "protocol", "sweep-u", "sweep-eps", "compensation", "adiabatic")
TWO_PI = 2 * math.pi


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str = "protocol"
    omega0_hz: float = 10e9
    g_hz: float = 100e6
    J_hz: float = 50e6
    delta_hz: float = 0.0
    kappa_hz: float = 10e3
    gamma_q_hz: float = 100e3
    gamma_p_hz: float | None = None
    epsilon_hz: float = 5e6
    model: str = "bose_hubbard"
    u_over_j: float | None = None
    dissipation: bool = True
    calibrate: bool = False
    photon_cutoff: int = 2
    excitation_cutoff: int | None = None
    rtol: float = 1e-8
    sectors: list[int] = field(default_factory=lambda: [0, 1, 2])
    sweep_eps_over_j: list[float] = field(default_factory=lambda: [0.02, 0.04, 0.1])
    sweep_gamma_p_over_j: float = 2e-4
    u_grid_max: float = 4.0
    u_grid_points: int = 33
    sweep_gamma_p_list: list[float] = field(default_factory=lambda: [0.0, 2e-4, 2e-3, 0.01])
    sweep_u_over_j: float = 2.0
    eps_grid_min: float = 0.005
    eps_grid_max: float = 0.3
    eps_grid_points: int = 25
    delta_g_over_g: list[float] = field(default_factory=lambda: [0.1, 0.0, -0.1])
    delta_omega0_min_over_g: float = -0.1
    delta_omega0_max_over_g: float = 0.1
    delta_omega0_points: int = 21
    ramp_delta_final_over_g: float = 10.0
    ramp_ratio: float = 0.01
    n_jobs: int | None = None

    def system_params(self) -> SystemParams:
        return SystemParams(
            omega0=TWO_PI * self.omega0_hz,
            g=TWO_PI * self.g_hz,
            J=TWO_PI * self.J_hz,
            delta=TWO_PI * self.delta_hz,
            kappa=TWO_PI * self.kappa_hz,
            gamma_q=TWO_PI * self.gamma_q_hz,
            gamma_p=None if self.gamma_p_hz is None else TWO_PI * self.gamma_p_hz,
        )


_POSITIVE = ("omega0_hz", "g_hz", "epsilon_hz", "rtol")
_NON_NEGATIVE = ("J_hz", "kappa_hz", "gamma_q_hz", "gamma_p_hz")


def _coerce(name: str, value, annotation: str):
    try:
        if value is None:
            if "None" in annotation:
                return None
            raise TypeError("null not allowed")
        if annotation.startswith("list[int]"):
            return [int(v) for v in value]
        if annotation.startswith("list[float]"):
            return [float(v) for v in value]
        if annotation.startswith("bool"):
            if isinstance(value, str):
                if value.lower() not in ("true", "false", "1", "0"):
                    raise ValueError(value)
                return value.lower() in ("true", "1")
            return bool(value)
        if annotation.startswith("int"):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if annotation.startswith("float"):
            if isinstance(value, bool):
                raise TypeError(value)
            return float(value)
        return str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid value for {name!r}: {value!r}") from exc


def _parse_override(item: str) -> tuple[str, object]:
    key, sep, raw = item.partition("=")
    if not sep or not key:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def parse_config(path=None, overrides=(), experiment: str | None = None) -> ExperimentConfig:
    """Defaults, then the JSON file, then ``key=value`` overrides; unknown keys are rejected."""
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file {path} not found") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
    raw = dict(raw)
    for item in overrides:
        key, value = _parse_override(item)
        raw[key] = value
    if experiment is not None:
        raw["experiment"] = experiment

    fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(raw) - set(fields))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    values = {k: _coerce(k, v, str(fields[k].type)) for k, v in raw.items()}
    cfg = ExperimentConfig(**values)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}")
    if cfg.model not in ("bose_hubbard", "full_jc"):
        raise ConfigError(f"unknown model {cfg.model!r}")
    for name in _POSITIVE:
        v = getattr(cfg, name)
        if not (math.isfinite(v) and v > 0):
            raise ConfigError(f"{name} must be finite and positive, got {v}")
    for name in _NON_NEGATIVE:
        v = getattr(cfg, name)
        if v is not None and not (math.isfinite(v) and v >= 0):
            raise ConfigError(f"{name} must be finite and non-negative, got {v}")
    if not math.isfinite(cfg.delta_hz):
        raise ConfigError("delta_hz must be finite")
    if cfg.photon_cutoff < 1:
        raise ConfigError("photon_cutoff must be at least 1")
    if cfg.epsilon_hz > cfg.J_hz:
        warnings.warn(f"epsilon ({cfg.epsilon_hz:g} Hz) exceeds J ({cfg.J_hz:g} Hz)", stacklevel=2)
    if cfg.J_hz > 0 and cfg.g_hz < 5 * cfg.J_hz:
        warnings.warn("g < 5 J: outside the strong-coupling regime", stacklevel=2)


def _quiet_params(cfg: ExperimentConfig) -> SystemParams:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return cfg.system_params()


def _hamiltonian(cfg: ExperimentConfig, params: SystemParams, n_max: int):
    if cfg.model == "full_jc":
        basis = build_basis(4, cfg.photon_cutoff, True, n_max)
        return build_lattice_hamiltonian(params, basis)
    basis = build_basis(4, cfg.photon_cutoff, False, n_max)
    U = None if cfg.u_over_j is None else cfg.u_over_j * params.J
    return build_bose_hubbard(bose_hubbard_params(params, U=U), basis)


def _params_meta(params: SystemParams) -> dict:
    return {
        "omega0_over_2pi_Hz": params.omega0 / TWO_PI,
        "g_over_2pi_Hz": params.g / TWO_PI,
        "J_over_2pi_Hz": params.J / TWO_PI,
        "delta_over_2pi_Hz": params.delta / TWO_PI,
    }


def run_spectrum(cfg, out: Path) -> dict:
    params = _quiet_params(cfg)
    H = _hamiltonian(cfg, params, max(cfg.sectors))
    meta = {"model": cfg.model, **_params_meta(params), "energy_reference": "lowest N=0 level"}
    write_csv(out / "spectrum.csv", SPECTRUM_COLUMNS, spectrum_rows(H, cfg.sectors), meta)
    return {"files": ["spectrum.csv"]}


def run_degeneracy(cfg, out: Path) -> dict:
    params = _quiet_params(cfg).replace(J=0.0, delta=0.0)
    basis = build_basis(4, cfg.photon_cutoff, True, max(cfg.sectors))
    profile = degeneracy_profile(build_lattice_hamiltonian(params, basis), params.g, cfg.sectors)
    rows = [(n, e / TWO_PI, mult) for n, clusters in profile.items() for e, mult in clusters]
    meta = {**_params_meta(params), "energy_reference": "lowest N=0 level"}
    write_csv(out / "degeneracy.csv", ("N", "energy_over_2pi_Hz", "multiplicity"), rows, meta)
    for n, clusters in profile.items():
        print(f"N={n}: " + ", ".join(f"{e / TWO_PI:.6g} Hz x{m}" for e, m in clusters))
    return {"files": ["degeneracy.csv"]}


def run_protocol_experiment(cfg, out: Path) -> dict:
    params = _quiet_params(cfg)
    U = None if cfg.u_over_j is None else cfg.u_over_j * params.J
    res = run_protocol(
        params,
        TWO_PI * cfg.epsilon_hz,
        model=cfg.model,
        dissipation=cfg.dissipation,
        U=U,
        photon_cutoff=cfg.photon_cutoff,
        excitation_cutoff=cfg.excitation_cutoff,
        rtol=cfg.rtol,
        calibrate=cfg.calibrate,
    )
    targets = {k: v for k, v in res.named.as_dict().items()}
    columns, rows = trajectory_rows(res.boundary_states, targets, res.named.psi_2_3)
    meta = {"model": cfg.model, **_params_meta(params), "epsilon_over_2pi_Hz": cfg.epsilon_hz}
    write_csv(out / "protocol.csv", columns, rows, meta)
    print(f"fidelity: {res.fidelity:.6f}")
    return {"files": ["protocol.csv"], "fidelity": res.fidelity}


def run_sweep_u(cfg, out: Path) -> dict:
    params = _quiet_params(cfg)
    grid = np.linspace(0.0, cfg.u_grid_max, cfg.u_grid_points)
    curves = sweep_fidelity_vs_u(
        cfg.sweep_eps_over_j, grid, cfg.sweep_gamma_p_over_j, params, cfg.rtol, cfg.photon_cutoff, cfg.n_jobs
    )
    write_csv(out / "fidelity_vs_u.csv", curves.columns, curves.rows, curves.metadata)
    return {"files": ["fidelity_vs_u.csv"]}


def run_sweep_eps(cfg, out: Path) -> dict:
    params = _quiet_params(cfg)
    grid = np.geomspace(cfg.eps_grid_min, cfg.eps_grid_max, cfg.eps_grid_points)
    curves = sweep_fidelity_vs_epsilon(
        cfg.sweep_gamma_p_list, grid, cfg.sweep_u_over_j, params, cfg.rtol, cfg.photon_cutoff, cfg.n_jobs
    )
    write_csv(out / "fidelity_vs_epsilon.csv", curves.columns, curves.rows, curves.metadata)
    return {"files": ["fidelity_vs_epsilon.csv"]}


def run_compensation(cfg, out: Path) -> dict:
    params = _quiet_params(cfg)
    g = params.g
    grid = np.linspace(cfg.delta_omega0_min_over_g, cfg.delta_omega0_max_over_g, cfg.delta_omega0_points) * g
    curves = compensation_curve([x * g for x in cfg.delta_g_over_g], grid, g, params.J)
    write_csv(out / "compensation.csv", curves.columns, curves.rows, curves.metadata)
    return {"files": ["compensation.csv"]}


def run_adiabatic(cfg, out: Path) -> dict:
    params = _quiet_params(cfg).replace(delta=0.0)
    basis = build_basis(4, cfg.photon_cutoff, True, 2)
    H = build_lattice_hamiltonian(params, basis)
    named = identify_named_states(H)
    delta_final = cfg.ramp_delta_final_over_g * params.g
    duration = abs(delta_final) / (4 * params.g**2 * cfg.ramp_ratio)
    res = adiabatic_ramp(params, basis, delta_final, duration, named.psi_2_3, rtol=cfg.rtol)
    overlap = abs(photon_pair_state(basis).overlap(res.state)) ** 2
    write_csv(
        out / "adiabatic.csv",
        ("adiabaticity_ratio", "duration_s", "overlap_photon_pair"),
        [(res.adiabaticity, duration, overlap)],
        {**_params_meta(params), "delta_final_over_2pi_Hz": delta_final / TWO_PI},
    )
    print(f"overlap: {overlap:.6f} (ratio {res.adiabaticity:.3g})")
    return {"files": ["adiabatic.csv"], "overlap": overlap}


RUNNERS = {
    "spectrum": run_spectrum,
    "degeneracy": run_degeneracy,
    "protocol": run_protocol_experiment,
    "sweep-u": run_sweep_u,
    "sweep-eps": run_sweep_eps,
    "compensation": run_compensation,
    "adiabatic": run_adiabatic,
}


def run(cfg: ExperimentConfig, out) -> int:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    try:
        extra = RUNNERS[cfg.experiment](cfg, out)
    except (IntegrationError, PositivityError, AmbiguousStateError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"error: numerical failure in {cfg.experiment}: {exc}", file=sys.stderr)
        return 3
    write_manifest(out / "manifest.json", dataclasses.asdict(cfg), time.perf_counter() - start, extra)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jclattice", description=__doc__.split("\n\n")[0])
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", help="JSON file of key/value settings")
    parser.add_argument("--out", default="results", help="output directory (default: results)")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = parse_config(args.config, args.overrides, args.experiment)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
