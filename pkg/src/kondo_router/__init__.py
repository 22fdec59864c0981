"""Exact-diagonalization simulator for entanglement routing between the
boundary spins of two suddenly coupled Kondo spin chains."""

__version__ = "0.1.0"

from .model import (ChainSpec, CompositeSpec, SectorBasis, SparseOperator, StateVector,
                    build_chain_hamiltonian, build_composite_hamiltonian, build_sector_basis,
                    embed_product_state, impurity_coupling_for)
from .observables import (concurrence, reduced_density_matrix, singlet_fidelity,
                          total_spin_squared)
from .solver import SolverConfig, evolve_dense_oracle, evolve_krylov, expectation, ground_state

__all__ = [
    "ChainSpec", "CompositeSpec", "SectorBasis", "SolverConfig", "SparseOperator", "StateVector",
    "build_chain_hamiltonian", "build_composite_hamiltonian", "build_sector_basis",
    "concurrence", "embed_product_state", "evolve_dense_oracle", "evolve_krylov",
    "expectation", "ground_state", "impurity_coupling_for", "reduced_density_matrix",
    "singlet_fidelity", "total_spin_squared",
]
