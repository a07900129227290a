"""Two-pulse entangled-pair protocol, momentum modes and the fidelity sweeps."""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    DEFAULT_RTOL,
    Schedule,
    boson_collapse_channels,
    evolve_piecewise,
    jc_collapse_channels,
)
from .hilbert import (
    DensityMatrix,
    FockBasis,
    Operator,
    QuantumState,
    build_basis,
    fidelity,
    populations,
    site_operator,
)
from .model import (
    BoseHubbardParams,
    PulseSegment,
    SystemParams,
    build_bose_hubbard,
    build_drive_generator,
    build_lattice_hamiltonian,
    compensating_detuning,
    lower_polariton_photon_weight,
)
from .spectrum import NamedStates, effective_kerr_u, epr_pair_state, identify_named_states, polariton_energy

MODELS = ("bose_hubbard", "full_jc")

MOMENTUM_MODES = 0.5 * np.array(
    [
        [1, -1, -1, 1],
        [-1, 1, -1, 1],
        [-1, -1, 1, 1],
        [1, 1, 1, 1],
    ],
    dtype=float,
)


def bose_hubbard_params(params: SystemParams, U: float | None = None, gamma_p: float | None = None) -> BoseHubbardParams:
    """Project the lattice onto its lower-polariton modes.

    Hopping and drive amplitudes are scaled by the photon weight ``w`` of the
    lower polariton (``J/2`` and ``1/sqrt 2`` at zero detuning).
    """
    w = lower_polariton_photon_weight(params.delta, params.g)
    return BoseHubbardParams(
        onsite_energy=polariton_energy(params.omega0, params.delta, params.g, 1),
        hopping=params.J * w,
        U=effective_kerr_u(params.omega0, params.delta, params.g) if U is None else U,
        gamma_p=params.polariton_damping if gamma_p is None else gamma_p,
        drive_factor=math.sqrt(w),
    )


def build_two_pulse_schedule(params: SystemParams, epsilon: float) -> Schedule:
    """Uniform pulse at ``omega0 - g + J`` then alternating pulse at ``omega0 - g - J``."""
    if not epsilon > 0:
        raise ValueError(f"drive amplitude must be positive, got {epsilon}")
    if epsilon > params.J / 5:
        warnings.warn(f"epsilon/J = {epsilon / params.J:.3g} is not small; off-resonant leakage grows", stacklevel=2)
    base = params.omega0 - params.g
    first = PulseSegment((epsilon,) * 4, base + params.J, math.pi / (2 * math.sqrt(2) * epsilon))
    second = PulseSegment((epsilon, -epsilon, epsilon, -epsilon), base - params.J, math.pi / (2 * epsilon))
    return Schedule((first, second))


@dataclass(frozen=True, eq=False)
class ProtocolModel:
    """Everything needed to run the protocol on one Hamiltonian."""

    kind: str
    basis: FockBasis
    hamiltonian: Operator
    named: NamedStates
    drive_factor: float
    channels: list = field(default_factory=list)

    def drives(self, schedule: Schedule):
        return [build_drive_generator(seg, self.basis, self.drive_factor) for seg in schedule.segments]


def prepare_model(
    params: SystemParams,
    model: str = "bose_hubbard",
    U: float | None = None,
    gamma_p: float | None = None,
    dissipation: bool = True,
    photon_cutoff: int = 2,
    excitation_cutoff: int | None = None,
) -> ProtocolModel:
    if model == "bose_hubbard":
        bh = bose_hubbard_params(params, U=U, gamma_p=gamma_p)
        basis = build_basis(4, photon_cutoff, has_qubits=False, excitation_cutoff=excitation_cutoff)
        H = build_bose_hubbard(bh, basis)
        channels = boson_collapse_channels(basis, bh.gamma_p) if dissipation and bh.gamma_p > 0 else []
        factor = bh.drive_factor
    elif model == "full_jc":
        cutoff = 4 if excitation_cutoff is None else excitation_cutoff
        basis = build_basis(4, photon_cutoff, has_qubits=True, excitation_cutoff=cutoff)
        H = build_lattice_hamiltonian(params, basis)
        channels = [c for c in jc_collapse_channels(params, basis) if c.rate > 0] if dissipation else []
        factor = 1.0
    else:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    named = identify_named_states(H, reference=epr_pair_state(basis, params.delta, params.g))
    return ProtocolModel(model, basis, H, named, factor, channels)


def calibrated_schedule(setup: ProtocolModel, epsilon: float) -> Schedule:
    """Two-pulse schedule tuned to the exact eigenenergy differences of ``setup``."""
    e = setup.named.energies
    first = PulseSegment((epsilon,) * 4, e["psi_1_4"] - e["psi_0"], math.pi / (2 * math.sqrt(2) * epsilon))
    second = PulseSegment(
        (epsilon, -epsilon, epsilon, -epsilon), e["psi_2_3"] - e["psi_1_4"], math.pi / (2 * epsilon)
    )
    return Schedule((first, second))


@dataclass(frozen=True, eq=False)
class ProtocolResult:
    final: QuantumState | DensityMatrix
    fidelity: float
    diagnostics: list[dict[str, float]]
    boundary_states: list
    duration: float
    schedule: Schedule | None
    named: NamedStates

    def leakage(self) -> float:
        """Population outside the three protocol states at the end."""
        return max(0.0, 1.0 - sum(self.diagnostics[-1].values()))


def run_protocol(
    params: SystemParams,
    epsilon: float,
    model: str = "bose_hubbard",
    dissipation: bool = True,
    U: float | None = None,
    gamma_p: float | None = None,
    photon_cutoff: int = 2,
    excitation_cutoff: int | None = None,
    frame: str = "rotating",
    rtol: float = DEFAULT_RTOL,
    calibrate: bool = False,
    resume: tuple[int, QuantumState | DensityMatrix] | None = None,
    setup: ProtocolModel | None = None,
) -> ProtocolResult:
    """Prepare ``|psi_0>``, apply the two pulses and score against ``|psi_2_3>``.

    ``resume=(k, state)`` restarts from a boundary state previously returned
    in ``boundary_states[k]``, skipping the first ``k`` segments.
    """
    if setup is None:
        setup = prepare_model(params, model, U, gamma_p, dissipation, photon_cutoff, excitation_cutoff)
    named = setup.named
    targets = named.as_dict()

    if epsilon == 0:
        start = named.ground
        diag = [populations(targets, start)]
        return ProtocolResult(start, fidelity(named.psi_2_3, start), diag, [start], 0.0, None, named)

    schedule = calibrated_schedule(setup, epsilon) if calibrate else build_two_pulse_schedule(params, epsilon)
    drives = setup.drives(schedule)
    if resume is None:
        skip, state, t0 = 0, named.ground, schedule.start_time
    else:
        skip, state = resume
        t0 = schedule.boundaries[skip]
    boundary, _ = evolve_piecewise(
        setup.hamiltonian, drives[skip:], state, start_time=t0, channels=setup.channels, frame=frame, rtol=rtol
    )
    final = boundary[-1]
    diag = [populations(targets, s) for s in boundary]
    return ProtocolResult(final, fidelity(named.psi_2_3, final), diag, boundary, schedule.duration, schedule, named)


def momentum_modes() -> np.ndarray:
    """Single-particle change of basis ``c = M a`` for the four-site ring."""
    return MOMENTUM_MODES.copy()


def momentum_operators(basis: FockBasis) -> list[Operator]:
    """Annihilation operators ``c_1..c_4`` of the ring normal modes."""
    if basis.n_sites != 4:
        raise ValueError("momentum modes are defined for the four-site ring")
    a = [site_operator(basis, k, "annihilate") for k in range(4)]
    return [sum((MOMENTUM_MODES[j, k] * a[k] for k in range(4)), Operator(basis, np.zeros_like(a[0].matrix))) for j in range(4)]


def momentum_transform(basis: FockBasis) -> Operator:
    """Unitary mapping each site-occupation state onto the same occupations of the normal modes.

    Exact only when no state exceeds the photon cutoff after redistribution,
    i.e. the excitation cutoff must not exceed the photon cutoff.
    """
    if basis.excitation_cutoff is None or basis.excitation_cutoff > basis.photon_cutoff:
        raise ValueError("momentum transform needs excitation_cutoff <= photon_cutoff to avoid truncation")
    c_dag = [c.dag().matrix for c in momentum_operators(basis)]
    W = np.zeros((basis.dim, basis.dim), dtype=complex)
    for col in range(basis.dim):
        label = basis.label(col)
        vec = np.zeros(basis.dim, dtype=complex)
        vec[basis.index([(0, q) for _, q in label])] = 1.0
        for k, (n, _) in enumerate(label):
            for _ in range(n):
                vec = c_dag[k] @ vec
            vec /= math.sqrt(math.factorial(n))
        W[:, col] = vec
    return Operator(basis, W)


def momentum_amplitudes(state: QuantumState) -> QuantumState:
    """Amplitudes of ``state`` on normal-mode occupation states."""
    W = momentum_transform(state.basis)
    return QuantumState(state.basis, W.matrix.conj().T @ state.vector, state.time)


@dataclass
class CurveSet:
    """Family of curves sharing an x axis, written as one long-format CSV."""

    name: str
    columns: tuple[str, ...]
    rows: list[tuple[float, ...]]
    metadata: dict = field(default_factory=dict)

    def curve(self, key: float, key_col: int = 0, x_col: int = 1, y_col: int = 2) -> tuple[np.ndarray, np.ndarray]:
        sel = [r for r in self.rows if r[key_col] == key]
        return np.array([r[x_col] for r in sel]), np.array([r[y_col] for r in sel])

    def keys(self, key_col: int = 0) -> list[float]:
        seen = []
        for r in self.rows:
            if r[key_col] not in seen:
                seen.append(r[key_col])
        return seen


def default_params() -> SystemParams:
    """Device values quoted for the proposal (2 pi x 10 GHz, 100 MHz, 50 MHz, 10 kHz, 100 kHz)."""
    tp = 2 * math.pi
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return SystemParams(omega0=tp * 10e9, g=tp * 100e6, J=tp * 50e6, kappa=tp * 10e3, gamma_q=tp * 100e3)


def _fidelity_point(job) -> float:
    params, eps_over_j, u_over_j, gamma_over_j, rtol, photon_cutoff = job
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = run_protocol(
            params,
            eps_over_j * params.J,
            model="bose_hubbard",
            U=u_over_j * params.J,
            gamma_p=gamma_over_j * params.J,
            rtol=rtol,
            photon_cutoff=photon_cutoff,
        )
    return res.fidelity


def _map(jobs, n_jobs: int | None):
    n_jobs = n_jobs if n_jobs is not None else (os.cpu_count() or 1)
    if n_jobs <= 1 or len(jobs) <= 1:
        return [_fidelity_point(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(_fidelity_point, jobs))


def default_u_grid() -> np.ndarray:
    return np.linspace(0.0, 4.0, 33)


def default_eps_grid() -> np.ndarray:
    return np.geomspace(0.005, 0.3, 25)


def sweep_fidelity_vs_u(
    eps_list=(0.02, 0.04, 0.1),
    u_grid=None,
    gamma_p: float = 2e-4,
    params: SystemParams | None = None,
    rtol: float = DEFAULT_RTOL,
    photon_cutoff: int = 2,
    n_jobs: int | None = None,
) -> CurveSet:
    """Fidelity against U/J for each drive amplitude; all inputs in units of J."""
    params = params or default_params()
    u_grid = default_u_grid() if u_grid is None else np.asarray(u_grid, dtype=float)
    jobs = [(params, e, u, gamma_p, rtol, photon_cutoff) for e in eps_list for u in u_grid]
    fids = _map(jobs, n_jobs)
    rows = [(float(j[1]), float(j[2]), f) for j, f in zip(jobs, fids)]
    return CurveSet("fidelity_vs_u", ("epsilon_over_J", "U_over_J", "fidelity"), rows, {"gamma_p_over_J": gamma_p})


def sweep_fidelity_vs_epsilon(
    gamma_p_list=(0.0, 2e-4, 2e-3, 0.01),
    eps_grid=None,
    u_over_j: float = 2.0,
    params: SystemParams | None = None,
    rtol: float = DEFAULT_RTOL,
    photon_cutoff: int = 2,
    n_jobs: int | None = None,
) -> CurveSet:
    """Fidelity against eps/J for each polariton damping; all inputs in units of J."""
    params = params or default_params()
    eps_grid = default_eps_grid() if eps_grid is None else np.asarray(eps_grid, dtype=float)
    jobs = [(params, e, u_over_j, gam, rtol, photon_cutoff) for gam in gamma_p_list for e in eps_grid]
    fids = _map(jobs, n_jobs)
    rows = [(float(j[3]), float(j[1]), f) for j, f in zip(jobs, fids)]
    return CurveSet("fidelity_vs_epsilon", ("gamma_p_over_J", "epsilon_over_J", "fidelity"), rows, {"U_over_J": u_over_j})


def compensation_curve(delta_g_list, delta_omega0_grid, g: float, J: float) -> CurveSet:
    """Compensating detuning and the resulting Kerr strength versus resonator-frequency error.

    ``delta_g_list`` and ``delta_omega0_grid`` are absolute deviations (rad/s).
    """
    rows = []
    for dg in delta_g_list:
        for dw in delta_omega0_grid:
            if dw + g <= 0:
                raise ValueError("delta_omega0 + g must stay positive over the grid")
            delta = compensating_detuning(g, dg, dw)
            u = effective_kerr_u(0.0, delta, g + dg)
            rows.append((dg / g, dw / g, delta / g, u / J))
    return CurveSet(
        "compensation",
        ("delta_g_over_g", "delta_omega0_over_g", "Delta_over_g", "U_over_J"),
        rows,
        {"g_over_2pi_Hz": g / (2 * math.pi), "J_over_2pi_Hz": J / (2 * math.pi)},
    )
