"""Schrodinger and Lindblad integration, piecewise drive schedules, adiabatic ramps.

Integration uses scipy's adaptive DOP853 (8th-order Runge-Kutta).  Because
explicit Runge-Kutta steps preserve linear invariants, the trace of the
density matrix is conserved up to round-off.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp

from .hilbert import DensityMatrix, FockBasis, Operator, QuantumState, site_operator
from .model import Drive, PulseSegment, SystemParams, build_lattice_hamiltonian

DEFAULT_RTOL = 1e-8
POSITIVITY_TOL = 1e-6


class IntegrationError(RuntimeError):
    pass


class PositivityError(RuntimeError):
    pass


@dataclass(frozen=True)
class CollapseChannel:
    operator: Operator
    rate: float

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError(f"collapse rate must be non-negative, got {self.rate}")


@dataclass(frozen=True)
class LinearRamp:
    """Qubit frequency ramp ``omega_z(t)`` from ``start`` to ``stop`` over ``duration``."""

    start: float
    stop: float
    duration: float


@dataclass(frozen=True)
class Schedule:
    segments: tuple[PulseSegment, ...]
    ramp: LinearRamp | None = None
    start_time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def boundaries(self) -> list[float]:
        t = [self.start_time]
        for seg in self.segments:
            t.append(t[-1] + seg.duration)
        return t

    @property
    def duration(self) -> float:
        return sum(seg.duration for seg in self.segments)


def _atol(rtol: float) -> float:
    return rtol * 1e-3


def _solve(rhs, y0, t0, t1, t_eval, rtol):
    sol = solve_ivp(rhs, (t0, t1), y0, method="DOP853", t_eval=t_eval, rtol=rtol, atol=_atol(rtol))
    if sol.status != 0:
        raise IntegrationError(f"integration failed at t={sol.t[-1] if len(sol.t) else t0}: {sol.message}")
    return sol


def _times(t_span, t_eval):
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t_eval is None:
        t_eval = np.array([t1])
    return t0, t1, np.asarray(t_eval, dtype=float)


def evolve_schrodinger(
    H: Operator | np.ndarray,
    psi0: QuantumState,
    t_span,
    drive=None,
    t_eval=None,
    rtol: float = DEFAULT_RTOL,
) -> list[QuantumState]:
    """Integrate ``i d psi/dt = (H + drive(t)) psi``.

    ``drive`` is any callable returning a matrix at time ``t``.  Returns the
    state at every time in ``t_eval`` (default: the end of ``t_span``).
    """
    Hm = H.matrix if isinstance(H, Operator) else np.asarray(H)
    if Hm.shape != (psi0.basis.dim, psi0.basis.dim):
        raise ValueError("Hamiltonian and state dimensions differ")
    t0, t1, t_eval = _times(t_span, t_eval)

    if drive is None:
        def rhs(t, y):
            return -1j * (Hm @ y)
    else:
        def rhs(t, y):
            return -1j * ((Hm + drive(t)) @ y)

    sol = _solve(rhs, psi0.vector.astype(complex), t0, t1, t_eval, rtol)
    return [QuantumState(psi0.basis, sol.y[:, k].copy(), float(t)) for k, t in enumerate(sol.t)]


def lindblad_rhs(H: np.ndarray, channels: list[CollapseChannel], drive=None):
    """Right-hand side ``f(t, vec(rho))`` of the master equation.

    Evaluated with sparse left/right products; the superoperator is never formed.
    """
    dim = H.shape[0]
    jumps = [sparse.csr_matrix(np.sqrt(c.rate) * c.operator.matrix) for c in channels if c.rate > 0]
    decay = sum((L.conj().T @ L for L in jumps), sparse.csr_matrix((dim, dim), dtype=complex))
    H_eff = sparse.csr_matrix(H - 0.5j * decay.toarray())
    k = len(jumps)
    L_rows = sparse.vstack(jumps).tocsr() if k else None
    L_cols = sparse.hstack(jumps).tocsr() if k else None

    def rhs(t, y):
        rho = y.reshape(dim, dim)
        A = H_eff @ rho
        if drive is not None:
            A += drive(t) @ rho
        out = -1j * (A - A.conj().T)
        if k:
            # sum_j L_j rho L_j^dag = sum_j L_j (L_j rho)^dag for Hermitian rho
            B = (L_rows @ rho).reshape(k, dim, dim)
            out += L_cols @ B.conj().transpose(0, 2, 1).reshape(k * dim, dim)
        return out.ravel()

    return rhs


def _as_density(state) -> DensityMatrix:
    if isinstance(state, QuantumState):
        return state.density()
    return state


def _check_output(rho: np.ndarray, t: float) -> np.ndarray:
    rho = 0.5 * (rho + rho.conj().T)
    lam = np.linalg.eigvalsh(rho).min()
    if lam < -POSITIVITY_TOL:
        raise PositivityError(f"density matrix eigenvalue {lam:.3e} at t={t:.6g} s below -{POSITIVITY_TOL}")
    return rho


def evolve_lindblad(
    H: Operator | np.ndarray,
    channels: list[CollapseChannel],
    rho0: DensityMatrix | QuantumState,
    t_span,
    drive=None,
    t_eval=None,
    rtol: float = DEFAULT_RTOL,
) -> list[DensityMatrix]:
    rho0 = _as_density(rho0)
    Hm = H.matrix if isinstance(H, Operator) else np.asarray(H)
    dim = rho0.basis.dim
    if Hm.shape != (dim, dim):
        raise ValueError("Hamiltonian and density matrix dimensions differ")
    t0, t1, t_eval = _times(t_span, t_eval)
    rhs = lindblad_rhs(Hm, channels, drive)
    sol = _solve(rhs, rho0.matrix.astype(complex).ravel(), t0, t1, t_eval, rtol)
    out = []
    for k, t in enumerate(sol.t):
        rho = _check_output(sol.y[:, k].reshape(dim, dim), t)
        out.append(DensityMatrix(rho0.basis, rho, float(t)))
    return out


def to_rotating_frame(state, frequency: float, excitations: np.ndarray, t: float):
    """Apply ``exp(i w N t)``; the inverse is ``to_rotating_frame(state, -w, ...)``."""
    phase = np.exp(1j * frequency * excitations * t)
    if isinstance(state, QuantumState):
        return QuantumState(state.basis, phase * state.vector, state.time)
    return DensityMatrix(state.basis, phase[:, None] * state.matrix * phase.conj()[None, :], state.time)


def evolve_piecewise(
    H: Operator,
    drives: list[Drive],
    state,
    start_time: float = 0.0,
    channels: list[CollapseChannel] | None = None,
    frame: str = "rotating",
    rtol: float = DEFAULT_RTOL,
    samples_per_segment: int = 0,
):
    """Evolve through consecutive drive segments.

    Returns ``(boundary_states, samples)``: the lab-frame state at the start
    and after every segment, and optional intra-segment lab-frame samples.
    In the rotating frame each segment is integrated with the static
    Hamiltonian ``H - w_d N + drive``; this requires ``H`` to conserve the
    excitation number ``N``.
    """
    if frame not in ("rotating", "lab"):
        raise ValueError(f"frame must be 'rotating' or 'lab', got {frame!r}")
    channels = channels or []
    dissipative = any(c.rate > 0 for c in channels) or isinstance(state, DensityMatrix)
    if dissipative:
        state = _as_density(state)
    exc = state.basis.excitations.astype(float)
    N = np.diag(exc).astype(complex)
    offset = vacuum_energy(H)
    H0 = H.matrix - offset * np.eye(len(exc))

    t = start_time
    boundaries = [_stamp(state, t)]
    samples = []
    for drive in drives:
        t1 = t + drive.segment.duration
        t_eval = np.linspace(t, t1, samples_per_segment + 2)[1:] if samples_per_segment else np.array([t1])
        if frame == "lab":
            args = (H0, drive)
            cur = state
        else:
            w = drive.frequency
            args = (H0 - w * N + drive.rotating(), None)
            cur = to_rotating_frame(state, w, exc, t)
        if dissipative:
            traj = evolve_lindblad(args[0], channels, cur, (t, t1), drive=args[1], t_eval=t_eval, rtol=rtol)
        else:
            traj = evolve_schrodinger(args[0], cur, (t, t1), drive=args[1], t_eval=t_eval, rtol=rtol)
        if frame == "rotating":
            traj = [to_rotating_frame(s, -drive.frequency, exc, s.time) for s in traj]
        traj = [_global_phase(s, offset * (s.time - t)) for s in traj]
        samples.extend(traj)
        state = traj[-1]
        t = t1
        boundaries.append(state)
    return boundaries, samples


def vacuum_energy(H: Operator) -> float:
    """Diagonal energy of the all-empty state, removed as a global phase during integration."""
    basis = H.basis
    try:
        idx = basis.index([(0, 0)] * basis.n_sites)
    except KeyError:
        return 0.0
    return float(np.real(H.matrix[idx, idx]))


def _global_phase(state, angle: float):
    if isinstance(state, QuantumState):
        return QuantumState(state.basis, np.exp(-1j * angle) * state.vector, state.time)
    return state


def _stamp(state, t):
    if isinstance(state, QuantumState):
        return QuantumState(state.basis, state.vector, t)
    return DensityMatrix(state.basis, state.matrix, t)


def jc_collapse_channels(params: SystemParams, basis: FockBasis) -> list[CollapseChannel]:
    """Photon loss at ``kappa`` and qubit relaxation at ``gamma_q`` on every site."""
    out = []
    for j in range(basis.n_sites):
        out.append(CollapseChannel(site_operator(basis, j, "annihilate"), params.kappa))
        out.append(CollapseChannel(site_operator(basis, j, "sigma_minus"), params.gamma_q))
    return out


def boson_collapse_channels(basis: FockBasis, rate: float) -> list[CollapseChannel]:
    return [CollapseChannel(site_operator(basis, j, "annihilate"), rate) for j in range(basis.n_sites)]


@dataclass(frozen=True, eq=False)
class RampResult:
    state: QuantumState
    adiabaticity: float
    initial_overlap: float = field(default=1.0)


def adiabatic_ramp(
    params: SystemParams,
    basis: FockBasis,
    delta_final: float,
    duration: float,
    psi_init: QuantumState,
    rtol: float = DEFAULT_RTOL,
) -> RampResult:
    """Ramp ``omega_z`` linearly from ``omega0 + params.delta`` by ``delta_final`` over ``duration``.

    The ramp is integrated in the frame rotating at ``omega0`` per
    excitation.  ``adiabaticity`` is ``(delta_final / duration) / (4 g^2)``.
    """
    H0 = build_lattice_hamiltonian(params, basis)
    vals, vecs = np.linalg.eigh(H0.matrix)
    nearest = float(np.max(np.abs(vecs.conj().T @ psi_init.vector) ** 2))
    if nearest < 0.99:
        warnings.warn(f"initial state is not an eigenstate (best overlap {nearest:.4f})", stacklevel=2)
    ratio = abs(delta_final) / duration / (4 * params.g**2)

    exc = basis.excitations.astype(float)
    sz = sum(site_operator(basis, j, "sigma_z").matrix for j in range(basis.n_sites))
    offset = vacuum_energy(H0)
    Hrot = H0.matrix - params.omega0 * np.diag(exc) - offset * np.eye(basis.dim)
    rate = delta_final / duration

    def ramp(t):
        return 0.5 * rate * t * sz

    start = QuantumState(basis, psi_init.vector, 0.0)
    final = evolve_schrodinger(Hrot, start, (0.0, duration), drive=ramp, rtol=rtol)[-1]
    final = _global_phase(to_rotating_frame(final, -params.omega0, exc, duration), offset * duration)
    return RampResult(final, ratio, nearest)


def excitation_populations(state, max_n: int | None = None) -> dict[int, float]:
    """Probability of each excitation-number sector."""
    exc = state.basis.excitations
    probs = np.abs(state.vector) ** 2 if isinstance(state, QuantumState) else np.real(np.diag(state.matrix))
    top = int(exc.max()) if max_n is None else max_n
    return {n: float(probs[exc == n].sum()) for n in range(top + 1)}
