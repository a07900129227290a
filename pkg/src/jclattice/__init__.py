"""Simulation of entangled-pair pumping in a four-site Jaynes-Cummings ring."""

__version__ = "0.1.0"

from .hilbert import (
    DensityMatrix,
    FockBasis,
    Operator,
    QuantumState,
    build_basis,
    fidelity,
    sector_indices,
    site_operator,
    total_excitation_operator,
)
from .model import (
    BoseHubbardParams,
    PulseSegment,
    SystemParams,
    build_bose_hubbard,
    build_drive_generator,
    build_lattice_hamiltonian,
    compensating_detuning,
    tunneling_from_capacitance,
)
from .spectrum import (
    degeneracy_profile,
    diagonalize_sector,
    effective_kerr_u,
    identify_named_states,
    polariton_energy,
)
from .dynamics import adiabatic_ramp, evolve_lindblad, evolve_schrodinger
from .protocol import (
    build_two_pulse_schedule,
    compensation_curve,
    momentum_modes,
    momentum_transform,
    run_protocol,
    sweep_fidelity_vs_epsilon,
    sweep_fidelity_vs_u,
)
