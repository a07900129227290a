import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jclattice.hilbert import build_basis, site_operator, translation_operator
from jclattice.model import (
    BoseHubbardParams,
    PulseSegment,
    SystemParams,
    build_bose_hubbard,
    build_drive_generator,
    build_lattice_hamiltonian,
    compensating_detuning,
    lower_polariton_photon_weight,
    tunneling_from_capacitance,
)
from jclattice.spectrum import polariton_energy

from .conftest import make_params

TWO_PI = 2 * math.pi


def sector_eigs(H, n):
    idx = np.flatnonzero(H.basis.excitations == n)
    return np.linalg.eigvalsh(H.matrix[np.ix_(idx, idx)])


def test_params_validation():
    with pytest.raises(ValueError):
        make_params(g=0.0)
    with pytest.raises(ValueError):
        make_params(J=-1.0)
    with pytest.warns(UserWarning, match="strong-coupling"):
        SystemParams(omega0=10.0, g=1.0, J=1.0)


def test_polariton_damping_default_and_override():
    p = make_params(kappa=1e-3, gamma_q=3e-3)
    assert p.polariton_damping == pytest.approx(2e-3)
    assert p.replace(gamma_p=5e-4).polariton_damping == 5e-4


def test_single_site_polariton_doublet():
    p = make_params(delta_omega0=(0.0,), delta_g=(0.0,), J=0.0)
    H = build_lattice_hamiltonian(p, build_basis(1, 3, True))
    e = sector_eigs(H, 1) - sector_eigs(H, 0)[0]
    assert np.allclose(e, [p.omega0 - p.g, p.omega0 + p.g])


def test_photon_hopping_band():
    # g must be positive, so a vanishing coupling stands in for g = 0
    p = make_params(g=1e-300, J=1.0)
    basis = build_basis(4, 1, True, 1)
    H = build_lattice_hamiltonian(p, basis)
    idx = [basis.index([(1 if k == j else 0, 0) for k in range(4)]) for j in range(4)]
    e = np.linalg.eigvalsh(H.matrix[np.ix_(idx, idx)]) - H.matrix[0, 0].real
    assert np.allclose(e, p.omega0 + np.array([-2.0, 0.0, 0.0, 2.0]) * p.J)


def test_uncoupled_hamiltonian_is_diagonal():
    p = make_params(g=1e-300, J=0.0)
    basis = build_basis(4, 2, True, 3)
    H = build_lattice_hamiltonian(p, basis).matrix
    assert np.abs(H - np.diag(np.diag(H))).max() < 1e-250
    expected = p.omega0 * basis.photons.sum(1) + 0.5 * p.omega_z * (2 * basis.qubits - 1).sum(1)
    assert np.allclose(np.diag(H).real, expected)


def test_lattice_is_hermitian_and_translation_invariant(jc_basis):
    H = build_lattice_hamiltonian(make_params(), jc_basis)
    T = translation_operator(jc_basis)
    assert H.is_hermitian()
    assert np.array_equal(T.matrix @ H.matrix @ T.matrix.T, H.matrix)


def test_disorder_breaks_translation(jc_basis):
    H = build_lattice_hamiltonian(make_params(delta_g=(0.5, 0, 0, 0)), jc_basis)
    T = translation_operator(jc_basis)
    assert not np.allclose(T.matrix @ H.matrix @ T.matrix.T, H.matrix)


def test_lattice_rejects_boson_basis():
    with pytest.raises(ValueError):
        build_lattice_hamiltonian(make_params(), build_basis(4, 2, False))


def test_zero_drive_is_zero(jc_basis):
    d = build_drive_generator(PulseSegment((0, 0, 0, 0), 5.0, 1.0), jc_basis)
    assert all(np.count_nonzero(d(t)) == 0 for t in (0.0, 0.3, 1.7))


def test_uniform_drive_at_time_zero(jc_basis):
    eps = 0.02
    d = build_drive_generator(PulseSegment((eps,) * 4, 999.0, 1.0), jc_basis)
    expected = sum(eps * (site_operator(jc_basis, j, "create").matrix + site_operator(jc_basis, j, "annihilate").matrix) for j in range(4))
    assert np.allclose(d(0.0), expected)


def test_drive_is_hermitian_and_acts_on_photons_only(jc_basis):
    d = build_drive_generator(PulseSegment((0.1, -0.2j, 0.3, 0.05 + 0.1j), 7.3, 1.0), jc_basis)
    for t in np.linspace(0, 2, 17):
        m = d(t)
        assert np.allclose(m, m.conj().T, atol=1e-15)
    moved = np.abs(d(0.4)) > 0
    rows, cols = np.nonzero(moved)
    assert np.array_equal(jc_basis.qubits[rows], jc_basis.qubits[cols])


def test_pulse_segment_validation():
    with pytest.raises(ValueError):
        PulseSegment((1, 1, 1, 1), 1.0, 0.0)
    assert PulseSegment((1, -2j, 0, 0), 1.0, 1.0).max_amplitude == 2


def test_bose_hubbard_double_occupancy_costs_u():
    bh = BoseHubbardParams(onsite_energy=3.0, hopping=0.0, U=0.7)
    basis = build_basis(1, 3, False)
    e = np.diag(build_bose_hubbard(bh, basis).matrix).real
    assert e[2] - 2 * e[1] == pytest.approx(0.7)


def test_bose_hubbard_free_modes(boson_basis):
    bh = BoseHubbardParams(onsite_energy=2.5, hopping=0.0, U=0.0)
    H = build_bose_hubbard(bh, boson_basis).matrix
    assert np.allclose(H, np.diag(2.5 * boson_basis.photons.sum(1)))


def test_bose_hubbard_hard_core_limit():
    # two hard-core bosons on a 4-ring: single-particle levels -2t, 0, 0, 2t with t = J/2
    J = 1.0
    bh = BoseHubbardParams(onsite_energy=0.0, hopping=J / 2, U=1e6)
    basis = build_basis(4, 2, False, 2)
    e = sector_eigs(build_bose_hubbard(bh, basis), 2)[:6]
    r2 = math.sqrt(2) * J
    assert np.allclose(e, [-r2, 0, 0, 0, 0, r2], atol=1e-5)


def test_bose_hubbard_rejects_qubits(jc_basis):
    with pytest.raises(ValueError):
        build_bose_hubbard(BoseHubbardParams(1.0, 0.5, 1.0), jc_basis)


def test_tunneling_from_capacitance():
    assert tunneling_from_capacitance(TWO_PI * 10e9, 10e-15, 2e-12) == pytest.approx(TWO_PI * 50e6)
    assert tunneling_from_capacitance(TWO_PI * 10e9, 0.0, 2e-12) == 0.0
    assert tunneling_from_capacitance(TWO_PI * 5e9, 20e-15, 1e-12) == pytest.approx(TWO_PI * 100e6)
    with pytest.raises(ValueError):
        tunneling_from_capacitance(1.0, 1e-15, 0.0)
    with pytest.raises(ValueError):
        tunneling_from_capacitance(1.0, -1e-15, 1e-12)
    with pytest.warns(UserWarning):
        tunneling_from_capacitance(1.0, 1e-12, 2e-12)


def test_compensating_detuning_examples():
    g = 1.0
    assert compensating_detuning(g, 0.0, 0.0) == 0.0
    assert compensating_detuning(g, 0.1 * g, 0.0) == pytest.approx(0.21 * g)
    with pytest.raises(ValueError):
        compensating_detuning(g, 0.0, -g)


@settings(max_examples=200, deadline=None)
@given(dg=st.floats(-0.1, 0.1), dw=st.floats(-0.1, 0.1))
def test_compensation_restores_lower_polariton(dg, dw):
    omega0, g = 50.0, 1.0
    delta = compensating_detuning(g, dg * g, dw * g)
    e1 = polariton_energy(omega0 + dw * g, delta, g + dg * g, 1)
    assert e1 == pytest.approx(omega0 - g, rel=1e-12)


def test_compensation_does_not_restore_upper_polariton():
    omega0, g = 50.0, 1.0
    for dg, dw in [(0.1, 0.0), (0.0, -0.05), (-0.1, 0.08)]:
        delta = compensating_detuning(g, dg, dw)
        upper = polariton_energy(omega0 + dw, delta, g + dg, 1, "upper")
        assert abs(upper - (omega0 + g)) > 1e-3


def test_photon_weight():
    assert lower_polariton_photon_weight(0.0, 1.0) == pytest.approx(0.5)
    assert lower_polariton_photon_weight(1e6, 1.0) == pytest.approx(1.0, abs=1e-6)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert lower_polariton_photon_weight(-1e6, 1.0) == pytest.approx(0.0, abs=1e-6)
