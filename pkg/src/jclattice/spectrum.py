"""Sector-resolved exact diagonalization and identification of the protocol states."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .hilbert import (
    FockBasis,
    Operator,
    QuantumState,
    commutator,
    reflection_operator,
    sector_indices,
    total_excitation_operator,
    translation_operator,
)

SYMMETRY_RTOL = 1e-12


class AmbiguousStateError(RuntimeError):
    """Symmetry labels and energy windows do not single out one eigenstate."""


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Eigenpairs of one excitation sector, energies ascending.

    ``vectors`` holds full-basis eigenvectors as columns.  ``labels`` are the
    cyclic-shift eigenvalues, or ``None`` when the Hamiltonian is not
    translation invariant.
    """

    sector: int
    energies: np.ndarray
    vectors: np.ndarray
    basis: FockBasis
    labels: np.ndarray | None = None

    def __len__(self):
        return len(self.energies)

    def state(self, m: int) -> QuantumState:
        return QuantumState(self.basis, self.vectors[:, m])


@dataclass(frozen=True, eq=False)
class NamedStates:
    ground: QuantumState
    psi_1_4: QuantumState
    psi_2_3: QuantumState
    energies: dict[str, float]

    def as_dict(self) -> dict[str, QuantumState]:
        return {"psi_0": self.ground, "psi_1_4": self.psi_1_4, "psi_2_3": self.psi_2_3}


def fix_phase(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    vectors = np.array(vectors, dtype=complex, copy=True)
    single = vectors.ndim == 1
    if single:
        vectors = vectors[:, None]
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    vectors = vectors * (np.abs(pivots) / pivots)
    return vectors[:, 0] if single else vectors


def _commutes(a: Operator, b: Operator) -> bool:
    return commutator(a, b).norm() <= SYMMETRY_RTOL * max(a.norm() * b.norm(), 1e-300)


def _symmetric_subspace(op: np.ndarray, eigenvalue: complex, order: int) -> np.ndarray:
    """Orthonormal basis of ``{v : op v = eigenvalue v}`` for a unitary ``op`` with ``op**order = 1``."""
    dim = op.shape[0]
    proj = np.zeros((dim, dim), dtype=complex)
    power = np.eye(dim, dtype=complex)
    for m in range(order):
        proj += eigenvalue ** (-m) * power
        power = op @ power
    proj /= order
    vals, vecs = np.linalg.eigh(0.5 * (proj + proj.conj().T))
    return vecs[:, vals > 0.5]


def diagonalize_sector(H: Operator, n: int, use_symmetry: bool = True) -> EigenSystem:
    """Full spectrum of the ``n``-excitation block of ``H``.

    When ``H`` commutes with the cyclic shift, the block is diagonalized per
    momentum so every eigenvector carries an exact translation label.
    """
    basis = H.basis
    N = total_excitation_operator(basis)
    if not _commutes(N, H):
        raise ValueError("Hamiltonian does not conserve the excitation number")
    idx = sector_indices(basis, n)
    if len(idx) == 0:
        raise ValueError(f"excitation sector {n} is empty in this basis")
    block = H.matrix[np.ix_(idx, idx)]

    T = translation_operator(basis) if basis.n_sites > 1 else None
    if use_symmetry and T is not None and _commutes(T, H):
        t_block = T.matrix[np.ix_(idx, idx)]
        order = basis.n_sites
        energies, vectors, labels = [], [], []
        for k in range(order):
            lam = np.exp(2j * np.pi * k / order)
            Q = _symmetric_subspace(t_block, lam, order)
            if Q.shape[1] == 0:
                continue
            vals, vecs = np.linalg.eigh(Q.conj().T @ block @ Q)
            energies.append(vals)
            vectors.append(Q @ vecs)
            labels.append(np.full(len(vals), lam))
        energies = np.concatenate(energies)
        sub = np.concatenate(vectors, axis=1)
        labels = np.concatenate(labels)
        order_idx = np.argsort(energies, kind="stable")
        energies, sub, labels = energies[order_idx], sub[:, order_idx], labels[order_idx]
        labels = _snap_roots(labels, order)
    else:
        energies, sub = np.linalg.eigh(block)
        labels = None

    full = np.zeros((basis.dim, len(idx)), dtype=complex)
    full[idx, :] = fix_phase(sub)
    return EigenSystem(n, energies, full, basis, labels)


def _snap_roots(labels: np.ndarray, order: int) -> np.ndarray:
    k = np.round(np.angle(labels) * order / (2 * np.pi)).astype(int) % order
    roots = np.exp(2j * np.pi * k / order)
    # exact values for the real and imaginary roots
    return np.round(roots.real, 15) + 1j * np.round(roots.imag, 15)


def polariton_energy(omega0: float, delta: float, g: float, n: int, branch: str = "lower") -> float:
    """Energy of the ``n``-excitation single-site polariton, measured from ``|0, down>``."""
    if n < 1:
        raise ValueError("polariton energies are defined for n >= 1")
    if branch not in ("lower", "upper"):
        raise ValueError(f"branch must be 'lower' or 'upper', got {branch!r}")
    sign = -1.0 if branch == "lower" else 1.0
    return n * omega0 + 0.5 * delta + sign * math.sqrt(0.25 * delta**2 + n * g**2)


def effective_kerr_u(omega0: float, delta: float, g: float) -> float:
    """Polariton self-interaction ``E_2- - 2 E_1-``."""
    return polariton_energy(omega0, delta, g, 2) - 2 * polariton_energy(omega0, delta, g, 1)


def _ground_energy(eig0: EigenSystem) -> float:
    return float(eig0.energies[0])


def identify_named_states(
    H: Operator,
    eigensystems: dict[int, EigenSystem] | None = None,
    params=None,
    reference: QuantumState | None = None,
) -> NamedStates:
    """Locate the vacuum, the symmetric single-polariton state and the EPR pair state.

    The single-excitation target is the translation-symmetric state among the
    lowest four of its sector.  The pair state is the one among the lowest six
    two-excitation states that is odd under the cyclic shift and even under
    the mirror through site 1; the mirror separates it from the degenerate
    alternating nearest-neighbour pair state.  If several candidates remain
    inside one degenerate cluster (free bosons), ``reference`` is projected
    onto their span; any other ambiguity raises :class:`AmbiguousStateError`.
    """
    basis = H.basis
    if basis.n_sites != 4:
        raise ValueError("state identification is defined for the four-site ring")
    if eigensystems is None:
        eigensystems = {n: diagonalize_sector(H, n) for n in (0, 1, 2)}
    if any(eigensystems[n].labels is None for n in (0, 1, 2)):
        raise AmbiguousStateError("Hamiltonian is not translation invariant; symmetry labels unavailable")
    if params is not None and (params.g < 5 * params.J or abs(params.delta) > params.J):
        warnings.warn("state identification assumes g >> J and small detuning", stacklevel=2)

    e0 = eigensystems[0]
    ground = e0.state(0)
    energies = {"psi_0": _ground_energy(e0)}

    e1 = eigensystems[1]
    gap_tol = 1e-9 * max(np.ptp(e1.energies), 1.0)
    low4 = np.flatnonzero(e1.energies <= e1.energies[3] + gap_tol)
    cand = [m for m in low4 if abs(e1.labels[m] - 1) < 1e-9]
    if len(cand) != 1:
        raise AmbiguousStateError(f"{len(cand)} translation-symmetric states among the lowest four of N=1")
    psi14 = e1.state(cand[0])
    energies["psi_1_4"] = float(e1.energies[cand[0]])

    e2 = eigensystems[2]
    gap_tol = 1e-9 * max(np.ptp(e2.energies), 1.0)
    low6 = np.flatnonzero(e2.energies <= e2.energies[5] + gap_tol)
    odd = [m for m in low6 if abs(e2.labels[m] + 1) < 1e-9]
    if not odd:
        raise AmbiguousStateError("no shift-odd state among the lowest six of N=2")
    R = reflection_operator(basis)
    V = e2.vectors[:, odd]
    E = e2.energies[odd]
    picked = []
    # diagonalize the mirror inside each degenerate cluster of shift-odd states
    start = 0
    while start < len(odd):
        stop = start + 1
        while stop < len(odd) and E[stop] - E[start] <= 1e-9 * max(abs(E[start]), 1.0):
            stop += 1
        Vc = V[:, start:stop]
        rvals, rvecs = np.linalg.eigh(Vc.conj().T @ R.matrix @ Vc)
        even = []
        for r, w in zip(rvals, rvecs.T):
            if abs(r - 1) < 1e-6:
                even.append(Vc @ w)
            elif abs(r + 1) >= 1e-6:
                raise AmbiguousStateError(f"mirror eigenvalue {r:.3g} is not +-1")
        if even:
            picked.append((float(np.mean(E[start:stop])), np.array(even).T))
        start = stop
    if len(picked) != 1:
        raise AmbiguousStateError(f"{len(picked)} shift-odd, mirror-even levels for the pair state")
    energy, cand = picked[0]
    if cand.shape[1] == 1:
        vec = cand[:, 0]
    elif reference is not None:
        vec = cand @ (cand.conj().T @ reference.vector)
        weight = float(np.linalg.norm(vec) ** 2)
        if weight < 0.5:
            raise AmbiguousStateError(f"reference has weight {weight:.3f} on the degenerate candidates")
        vec = vec / np.linalg.norm(vec)
    else:
        raise AmbiguousStateError(f"{cand.shape[1]} degenerate candidates for the pair state")
    psi23 = QuantumState(basis, fix_phase(vec))
    energies["psi_2_3"] = energy
    return NamedStates(ground, psi14, psi23, energies)


def degeneracy_profile(
    H: Operator,
    g: float,
    sectors=(0, 1, 2),
    rel_tol: float = 1e-9,
) -> dict[int, list[tuple[float, int]]]:
    """Cluster sector eigenvalues and count multiplicities.

    Energies are measured from the lowest ``N = 0`` level.
    """
    tol = rel_tol * g
    reference = float(diagonalize_sector(H, 0, use_symmetry=False).energies[0])
    profile = {}
    for n in sectors:
        vals = np.sort(diagonalize_sector(H, n, use_symmetry=False).energies) - reference
        clusters: list[list[float]] = [[vals[0]]]
        for v in vals[1:]:
            if v - clusters[-1][-1] <= tol:
                clusters[-1].append(v)
            else:
                clusters.append([v])
        profile[n] = [(float(np.mean(c)), len(c)) for c in clusters]
    return profile


def splitting_deviation(energies, pattern, reference: float | None = None) -> float:
    """Largest deviation of ``energies`` from ``reference + pattern``.

    With ``reference=None`` the common offset is fitted by least squares, so
    only the splitting structure is compared.
    """
    energies = np.sort(np.asarray(energies, dtype=float))
    pattern = np.sort(np.asarray(pattern, dtype=float))
    resid = energies - pattern
    offset = resid.mean() if reference is None else reference
    return float(np.max(np.abs(resid - offset)))


def lower_polariton_amplitudes(delta: float, g: float) -> tuple[float, float]:
    """``(photon, qubit)`` amplitudes of the one-excitation lower polariton on ``(|1,down>, |0,up>)``."""
    w = 0.5 * (1 + 0.5 * delta / math.hypot(0.5 * delta, g))
    return math.sqrt(w), -math.sqrt(1 - w)


def polariton_product_state(basis: FockBasis, terms, delta: float = 0.0, g: float = 1.0, photon_only: bool = False):
    """Superposition ``sum_c coef * prod_{j in sites} L_j^dag |0,down...>``.

    ``terms`` is a list of ``(coef, sites)``; each listed site holds one
    lower polariton (or one photon with ``photon_only`` or a boson-only
    basis), all other sites are empty.  The result is normalized.
    """
    if basis.has_qubits and not photon_only:
        local = [((1, 0), lower_polariton_amplitudes(delta, g)[0]), ((0, 1), lower_polariton_amplitudes(delta, g)[1])]
    else:
        local = [((1, 0), 1.0)]
    vec = np.zeros(basis.dim, dtype=complex)
    for coef, sites in terms:
        sites = list(sites)
        for choice in itertools.product(local, repeat=len(sites)):
            label = [(0, 0)] * basis.n_sites
            amp = coef
            for site, (lab, a) in zip(sites, choice):
                label[site] = lab
                amp *= a
            vec[basis.index(label)] += amp
    vec /= np.linalg.norm(vec)
    return QuantumState(basis, vec)


def epr_pair_state(basis: FockBasis, delta: float = 0.0, g: float = 1.0) -> QuantumState:
    """``(L_1 L_3 - L_2 L_4)^dag |psi_0> / sqrt 2``."""
    return polariton_product_state(basis, [(1.0, (0, 2)), (-1.0, (1, 3))], delta, g)


def symmetric_polariton_state(basis: FockBasis, delta: float = 0.0, g: float = 1.0) -> QuantumState:
    """``sum_j L_j^dag |psi_0> / 2``."""
    return polariton_product_state(basis, [(1.0, (j,)) for j in range(basis.n_sites)], delta, g)


def photon_pair_state(basis: FockBasis) -> QuantumState:
    """``(a_1 a_3 - a_2 a_4)^dag |vac, down> / sqrt 2``."""
    return polariton_product_state(basis, [(1.0, (0, 2)), (-1.0, (1, 3))], photon_only=True)
