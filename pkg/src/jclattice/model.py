"""Lattice, drive and effective Bose-Hubbard Hamiltonians plus parameter helpers.

Frequencies and rates are angular (rad/s); Hamiltonians are returned as
``H / hbar``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .hilbert import FockBasis, Operator, site_operator


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters of the resonator-qubit ring.

    ``delta`` is the qubit-resonator detuning ``omega_z - omega0``.
    ``delta_omega0`` and ``delta_g`` hold per-site fabrication deviations.
    ``gamma_p`` overrides the polariton damping ``(kappa + gamma_q) / 2``.
    """

    omega0: float
    g: float
    J: float
    delta: float = 0.0
    kappa: float = 0.0
    gamma_q: float = 0.0
    delta_omega0: tuple[float, ...] = (0.0, 0.0, 0.0, 0.0)
    delta_g: tuple[float, ...] = (0.0, 0.0, 0.0, 0.0)
    gamma_p: float | None = None

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError(f"g must be positive, got {self.g}")
        for name in ("J", "kappa", "gamma_q"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.gamma_p is not None and self.gamma_p < 0:
            raise ValueError("gamma_p must be non-negative")
        if len(self.delta_omega0) != len(self.delta_g):
            raise ValueError("delta_omega0 and delta_g must have one entry per site")
        object.__setattr__(self, "delta_omega0", tuple(float(x) for x in self.delta_omega0))
        object.__setattr__(self, "delta_g", tuple(float(x) for x in self.delta_g))
        if self.g < 5 * self.J:
            warnings.warn(f"g/J = {self.g / self.J:.3g} is outside the strong-coupling regime g >> J", stacklevel=3)

    @property
    def omega_z(self) -> float:
        return self.omega0 + self.delta

    @property
    def n_sites(self) -> int:
        return len(self.delta_omega0)

    @property
    def is_uniform(self) -> bool:
        return not any(self.delta_omega0) and not any(self.delta_g)

    @property
    def polariton_damping(self) -> float:
        if self.gamma_p is not None:
            return self.gamma_p
        return 0.5 * (self.kappa + self.gamma_q)

    def replace(self, **changes) -> SystemParams:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return replace(self, **changes)


@dataclass(frozen=True)
class PulseSegment:
    """Rectangular drive segment: per-site amplitudes, carrier frequency, duration."""

    amplitudes: tuple[complex, ...]
    drive_frequency: float
    duration: float

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError(f"segment duration must be positive, got {self.duration}")
        object.__setattr__(self, "amplitudes", tuple(complex(a) for a in self.amplitudes))

    @property
    def max_amplitude(self) -> float:
        return max(abs(a) for a in self.amplitudes)


@dataclass(frozen=True)
class BoseHubbardParams:
    """Effective model for the lower-polariton modes."""

    onsite_energy: float
    hopping: float
    U: float
    gamma_p: float = 0.0
    drive_factor: float = 1 / math.sqrt(2)


def ring_bonds(n_sites: int) -> list[tuple[int, int]]:
    if n_sites == 1:
        return []
    if n_sites == 2:
        return [(0, 1)]
    return [(j, (j + 1) % n_sites) for j in range(n_sites)]


def build_lattice_hamiltonian(params: SystemParams, basis: FockBasis) -> Operator:
    if not basis.has_qubits:
        raise ValueError("the lattice Hamiltonian needs a basis with qubits")
    if basis.n_sites != params.n_sites:
        raise ValueError(f"basis has {basis.n_sites} sites, params describe {params.n_sites}")
    H = Operator(basis, np.zeros((basis.dim, basis.dim), dtype=complex))
    a = [site_operator(basis, j, "annihilate") for j in range(basis.n_sites)]
    for j in range(basis.n_sites):
        sm = site_operator(basis, j, "sigma_minus")
        gj = params.g + params.delta_g[j]
        H = H + (params.omega0 + params.delta_omega0[j]) * site_operator(basis, j, "number")
        H = H + 0.5 * params.omega_z * site_operator(basis, j, "sigma_z")
        H = H + gj * (a[j].dag() @ sm + sm.dag() @ a[j])
    for j, k in ring_bonds(basis.n_sites):
        hop = a[j].dag() @ a[k]
        H = H + params.J * (hop + hop.dag())
    return H


@dataclass(frozen=True, eq=False)
class Drive:
    """Monochromatic drive ``sum_j eps_j e^{-i w t} A_j^dag + h.c.``.

    ``raising`` is the time-independent part ``factor * sum_j eps_j A_j^dag``.
    """

    segment: PulseSegment
    raising: Operator

    @property
    def frequency(self) -> float:
        return self.segment.drive_frequency

    def __call__(self, t: float) -> np.ndarray:
        phase = np.exp(-1j * self.frequency * t)
        up = phase * self.raising.matrix
        return up + up.conj().T

    def rotating(self) -> np.ndarray:
        """Drive matrix in the frame rotating at the carrier frequency."""
        up = self.raising.matrix
        return up + up.conj().T


def build_drive_generator(segment: PulseSegment, basis: FockBasis, factor: float = 1.0) -> Drive:
    """Drive acting on the bosonic modes only; ``factor`` rescales every amplitude."""
    if len(segment.amplitudes) != basis.n_sites:
        raise ValueError("one drive amplitude per site is required")
    up = np.zeros((basis.dim, basis.dim), dtype=complex)
    for j, eps in enumerate(segment.amplitudes):
        if eps:
            up += factor * eps * site_operator(basis, j, "create").matrix
    return Drive(segment, Operator(basis, up))


def build_bose_hubbard(bh: BoseHubbardParams, basis: FockBasis) -> Operator:
    if basis.has_qubits:
        raise ValueError("the Bose-Hubbard model needs a boson-only basis")
    dim = basis.dim
    n = basis.photons
    diag = bh.onsite_energy * n.sum(axis=1) + 0.5 * bh.U * (n * (n - 1)).sum(axis=1)
    H = Operator(basis, np.diag(diag.astype(complex)))
    b = [site_operator(basis, j, "annihilate") for j in range(basis.n_sites)]
    hopping = np.zeros((dim, dim), dtype=complex)
    for j, k in ring_bonds(basis.n_sites):
        hopping += (b[j].dag() @ b[k]).matrix
    return H + bh.hopping * (hopping + hopping.conj().T)


def bose_hubbard_drive(segment: PulseSegment, bh: BoseHubbardParams, basis: FockBasis) -> Drive:
    return build_drive_generator(segment, basis, factor=bh.drive_factor)


def tunneling_from_capacitance(omega0: float, c_coupling: float, c_resonator: float) -> float:
    """Tunneling rate ``J = omega0 * C1 / Cr`` between capacitively coupled resonators.

    ``c_coupling`` is the coupling capacitance C1 between resonator ends,
    ``c_resonator`` the resonator capacitance Cr (farads).
    """
    if c_resonator <= 0:
        raise ValueError(f"resonator capacitance must be positive, got {c_resonator}")
    if c_coupling < 0:
        raise ValueError(f"coupling capacitance must be non-negative, got {c_coupling}")
    if c_coupling > 0.1 * c_resonator:
        warnings.warn("coupling capacitance is not small compared to the resonator capacitance", stacklevel=2)
    return omega0 * c_coupling / c_resonator


def compensating_detuning(g: float, delta_g: float, delta_omega0: float) -> float:
    """Detuning that restores the lower-polariton energy to ``omega0 - g``."""
    denom = delta_omega0 + g
    if abs(denom) <= 1e-15 * max(abs(g), 1.0):
        raise ValueError("delta_omega0 + g must be non-zero")
    return ((delta_g + g) ** 2 - denom**2) / denom


def lower_polariton_photon_weight(delta: float, g: float) -> float:
    """Photon fraction of the single-excitation lower polariton."""
    return 0.5 * (1 + 0.5 * delta / math.hypot(0.5 * delta, g))

