"""Truncated Fock bases, site-local operators and state containers.

Each site carries one bosonic mode (photon number ``0..photon_cutoff``) and
optionally a two-level qubit.  Basis states are ordered lexicographically over
``(site_1, ..., site_n)`` with the local index ``2*n + q`` when qubits are
present (qubit level least significant) and ``n`` otherwise.

All operators are dense complex matrices; energies are angular frequencies
(hbar = 1 throughout the package).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

MAX_DIMENSION = 200_000

OPERATOR_KINDS = ("annihilate", "create", "number", "sigma_minus", "sigma_plus", "sigma_z")


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Enumerated product basis with an optional global excitation cutoff."""

    n_sites: int
    photon_cutoff: int
    has_qubits: bool
    excitation_cutoff: int | None
    photons: np.ndarray = field(repr=False)
    qubits: np.ndarray = field(repr=False)
    codes: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.codes)

    @property
    def local_dim(self) -> int:
        return (self.photon_cutoff + 1) * (2 if self.has_qubits else 1)

    @cached_property
    def excitations(self) -> np.ndarray:
        return self.photons.sum(axis=1) + self.qubits.sum(axis=1)

    def label(self, index: int) -> tuple[tuple[int, int], ...]:
        """Per-site ``(photon_number, qubit_level)`` pairs of a basis state."""
        return tuple(zip(self.photons[index].tolist(), self.qubits[index].tolist()))

    def index(self, label) -> int:
        """Inverse of :meth:`label`; raises ``KeyError`` for inadmissible labels."""
        label = tuple(label)
        if len(label) != self.n_sites:
            raise KeyError(label)
        photons = np.array([[site[0] for site in label]])
        qubits = np.array([[site[1] for site in label]])
        if photons.min() < 0 or photons.max() > self.photon_cutoff:
            raise KeyError(label)
        if qubits.min() < 0 or qubits.max() > (1 if self.has_qubits else 0):
            raise KeyError(label)
        idx = self._lookup(self._encode(photons, qubits))[0]
        if idx < 0:
            raise KeyError(label)
        return int(idx)

    def _encode(self, photons: np.ndarray, qubits: np.ndarray) -> np.ndarray:
        local = photons * 2 + qubits if self.has_qubits else photons
        weights = self.local_dim ** np.arange(self.n_sites - 1, -1, -1, dtype=np.int64)
        return (local.astype(np.int64) * weights).sum(axis=1)

    def _lookup(self, codes: np.ndarray) -> np.ndarray:
        """Index of each code in the basis, or -1 when absent."""
        pos = np.searchsorted(self.codes, codes)
        pos = np.clip(pos, 0, self.dim - 1)
        found = self.codes[pos] == codes
        return np.where(found, pos, -1)


def _count_states(n_sites: int, photon_cutoff: int, has_qubits: bool, excitation_cutoff: int | None) -> int:
    local_dim = (photon_cutoff + 1) * (2 if has_qubits else 1)
    if excitation_cutoff is None:
        return local_dim**n_sites
    # generating polynomial of per-site excitation counts, truncated at the cutoff
    site = np.zeros(photon_cutoff + 2, dtype=object)
    for n in range(photon_cutoff + 1):
        site[n] += 1
        if has_qubits:
            site[n + 1] += 1
    total = np.array([1], dtype=object)
    for _ in range(n_sites):
        total = np.convolve(total, site)[: excitation_cutoff + 1]
    return int(total.sum())


def build_basis(
    n_sites: int,
    photon_cutoff: int,
    has_qubits: bool = True,
    excitation_cutoff: int | None = None,
    max_dimension: int = MAX_DIMENSION,
) -> FockBasis:
    if n_sites < 1:
        raise ValueError(f"n_sites must be >= 1, got {n_sites}")
    if photon_cutoff < 0:
        raise ValueError(f"photon_cutoff must be >= 0, got {photon_cutoff}")
    if excitation_cutoff is not None and excitation_cutoff < 0:
        raise ValueError(f"excitation_cutoff must be >= 0, got {excitation_cutoff}")
    dim = _count_states(n_sites, photon_cutoff, has_qubits, excitation_cutoff)
    if dim > max_dimension:
        raise ValueError(f"basis dimension {dim} exceeds the cap of {max_dimension}")

    local = [(n, q) for n in range(photon_cutoff + 1) for q in ((0, 1) if has_qubits else (0,))]
    states = [
        s
        for s in itertools.product(local, repeat=n_sites)
        if excitation_cutoff is None or sum(n + q for n, q in s) <= excitation_cutoff
    ]
    arr = np.array(states, dtype=np.int64).reshape(len(states), n_sites, 2)
    photons, qubits = arr[:, :, 0], arr[:, :, 1]
    photons.setflags(write=False)
    qubits.setflags(write=False)
    basis = FockBasis(n_sites, photon_cutoff, has_qubits, excitation_cutoff, photons, qubits, np.empty(0))
    codes = basis._encode(photons, qubits)
    codes.setflags(write=False)
    object.__setattr__(basis, "codes", codes)
    return basis


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense complex matrix acting on a :class:`FockBasis`."""

    basis: FockBasis
    matrix: np.ndarray

    def dag(self) -> Operator:
        return Operator(self.basis, self.matrix.conj().T)

    def _other(self, other):
        if isinstance(other, Operator):
            if other.basis is not self.basis:
                raise ValueError("operators live on different bases")
            return other.matrix
        return other

    def __add__(self, other):
        return Operator(self.basis, self.matrix + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Operator(self.basis, self.matrix - self._other(other))

    def __neg__(self):
        return Operator(self.basis, -self.matrix)

    def __mul__(self, scalar):
        return Operator(self.basis, self.matrix * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Operator(self.basis, self.matrix / scalar)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            return Operator(self.basis, self.matrix @ self._other(other))
        return self.matrix @ other

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def is_hermitian(self, rtol: float = 1e-12) -> bool:
        scale = max(self.norm(), 1.0)
        return np.linalg.norm(self.matrix - self.matrix.conj().T) <= rtol * scale


def commutator(a: Operator, b: Operator) -> Operator:
    return a @ b - b @ a


def identity(basis: FockBasis) -> Operator:
    return Operator(basis, np.eye(basis.dim, dtype=complex))


def site_operator(basis: FockBasis, site: int, kind: str) -> Operator:
    """Single-site ladder, number or Pauli operator embedded in ``basis``.

    Transitions leaving the truncated space (photon or excitation cutoff)
    are dropped.
    """
    if not 0 <= site < basis.n_sites:
        raise ValueError(f"site {site} out of range for {basis.n_sites} sites")
    if kind not in OPERATOR_KINDS:
        raise ValueError(f"unknown operator kind {kind!r}")
    if kind.startswith("sigma") and not basis.has_qubits:
        raise ValueError(f"{kind} requires a basis with qubits")

    n = basis.photons[:, site]
    q = basis.qubits[:, site]
    mat = np.zeros((basis.dim, basis.dim), dtype=complex)
    if kind == "number":
        np.fill_diagonal(mat, n)
        return Operator(basis, mat)
    if kind == "sigma_z":
        np.fill_diagonal(mat, 2 * q - 1)
        return Operator(basis, mat)

    photons = basis.photons.copy()
    qubits = basis.qubits.copy()
    if kind == "annihilate":
        src = n > 0
        photons[:, site] -= 1
        amp = np.sqrt(n)
    elif kind == "create":
        src = n < basis.photon_cutoff
        photons[:, site] += 1
        amp = np.sqrt(n + 1)
    elif kind == "sigma_minus":
        src = q == 1
        qubits[:, site] -= 1
        amp = np.ones(basis.dim)
    else:
        src = q == 0
        qubits[:, site] += 1
        amp = np.ones(basis.dim)
    cols = np.flatnonzero(src)
    rows = basis._lookup(basis._encode(photons[cols], qubits[cols]))
    keep = rows >= 0
    mat[rows[keep], cols[keep]] = amp[cols[keep]]
    return Operator(basis, mat)


def total_excitation_operator(basis: FockBasis) -> Operator:
    return Operator(basis, np.diag(basis.excitations.astype(complex)))


def sector_indices(basis: FockBasis, n: int) -> np.ndarray:
    return np.flatnonzero(basis.excitations == n)


def site_permutation(basis: FockBasis, perm) -> Operator:
    """Operator moving the content of site ``j`` to site ``perm[j]``."""
    perm = list(perm)
    if sorted(perm) != list(range(basis.n_sites)):
        raise ValueError(f"not a permutation of the sites: {perm}")
    photons = np.empty_like(basis.photons)
    qubits = np.empty_like(basis.qubits)
    photons[:, perm] = basis.photons
    qubits[:, perm] = basis.qubits
    rows = basis._lookup(basis._encode(photons, qubits))
    mat = np.zeros((basis.dim, basis.dim), dtype=complex)
    mat[rows, np.arange(basis.dim)] = 1.0
    return Operator(basis, mat)


def translation_operator(basis: FockBasis) -> Operator:
    """Cyclic shift of the ring, site j -> j+1."""
    n = basis.n_sites
    return site_permutation(basis, [(j + 1) % n for j in range(n)])


def reflection_operator(basis: FockBasis) -> Operator:
    """Mirror about the axis through the first site, site j -> -j."""
    n = basis.n_sites
    return site_permutation(basis, [(-j) % n for j in range(n)])


@dataclass(frozen=True, eq=False)
class QuantumState:
    basis: FockBasis
    vector: np.ndarray
    time: float = 0.0

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    def overlap(self, other: QuantumState) -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.vector, other.vector))

    def density(self) -> DensityMatrix:
        return DensityMatrix(self.basis, np.outer(self.vector, self.vector.conj()), self.time)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    basis: FockBasis
    matrix: np.ndarray
    time: float = 0.0

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix).min())


def basis_state(basis: FockBasis, label, time: float = 0.0) -> QuantumState:
    vec = np.zeros(basis.dim, dtype=complex)
    vec[basis.index(label)] = 1.0
    return QuantumState(basis, vec, time)


def vacuum(basis: FockBasis) -> QuantumState:
    """All photon numbers zero, all qubits down."""
    return basis_state(basis, [(0, 0)] * basis.n_sites)


def fidelity(target: QuantumState, state: QuantumState | DensityMatrix) -> float:
    """``<target|rho|target>`` for a density matrix, ``|<target|psi>|^2`` for a pure state."""
    if isinstance(state, DensityMatrix):
        return float(np.real(np.vdot(target.vector, state.matrix @ target.vector)))
    return float(abs(np.vdot(target.vector, state.vector)) ** 2)


def populations(states: dict[str, QuantumState], state: QuantumState | DensityMatrix) -> dict[str, float]:
    return {name: fidelity(ref, state) for name, ref in states.items()}
