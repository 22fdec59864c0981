"""Closed-form dynamics of two two-spin singlets joined by a single bond.

For ``H = J'_1 s1.s2 + J'_2 s3.s4 + J_m s2.s3`` started from the product of
two singlets, the choice ``J_m = J'_1 + J'_2`` (resonance) makes spins 1 and
4 form a perfect singlet at ``t* = pi / (4 J_m)``.  The expressions here are
valid on resonance only; off resonance use the dense evolution of
:func:`four_spin_hamiltonian`.

Ket labels such as ``"0011"`` list site 1 first; see
:func:`kondo_router.model.label_to_config` for the storage order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (ChainSpec, CompositeSpec, SparseOperator, StateVector,
                    build_composite_hamiltonian, build_full_basis, label_to_config)

RESONANCE_TOL = 1e-12


@dataclass(frozen=True)
class FourSpinParams:
    j1_prime: float
    j2_prime: float
    j_m: float

    def __post_init__(self):
        if min(self.j1_prime, self.j2_prime, self.j_m) < 0:
            raise ValueError("couplings must be non-negative")

    @classmethod
    def resonant(cls, j1_prime: float, j2_prime: float) -> "FourSpinParams":
        return cls(j1_prime, j2_prime, j1_prime + j2_prime)

    @property
    def is_resonant(self) -> bool:
        return abs(self.j_m - (self.j1_prime + self.j2_prime)) < RESONANCE_TOL

    def composite(self) -> CompositeSpec:
        return CompositeSpec(ChainSpec(2, self.j1_prime), ChainSpec(2, self.j2_prime), self.j_m)


def _ket_amplitudes(terms: dict[str, complex]) -> np.ndarray:
    amps = np.zeros(16, dtype=np.complex128)
    for label, amp in terms.items():
        amps[label_to_config(label)] = amp
    return amps


def four_spin_state(j_m: float, t: float) -> StateVector:
    """Resonant state at time ``t`` (up to a global phase) in the full 4-spin basis."""
    s = -1j * math.sin(2 * j_m * t) / 2
    c = -math.cos(2 * j_m * t) / 2
    e = np.exp(2j * j_m * t) / 2
    amps = _ket_amplitudes({
        "0011": s, "1100": s,
        "1001": c, "0110": c,
        "0101": e, "1010": e,
    })
    return StateVector.normalized(build_full_basis(4), amps)


def singlet_product_state() -> StateVector:
    """``|psi-> (x) |psi->`` on sites (1,2) and (3,4)."""
    return StateVector.normalized(build_full_basis(4), _ket_amplitudes({
        "0101": 0.5, "0110": -0.5, "1001": -0.5, "1010": 0.5,
    }))


def four_spin_concurrence(j_m: float, t: float) -> float:
    return max(0.0, (1.0 - 3.0 * math.cos(4.0 * j_m * t)) / 4.0)


def four_spin_optimal(j1_prime: float, j2_prime: float) -> tuple[float, float]:
    """Resonant junction coupling and the time of the first perfect singlet."""
    if j1_prime <= 0 or j2_prime <= 0:
        raise ValueError(f"couplings must be positive, got ({j1_prime}, {j2_prime})")
    j_m = j1_prime + j2_prime
    return j_m, math.pi / (4.0 * j_m)


def four_spin_singlet_energies(j_m: float) -> tuple[float, float]:
    return -4.0 * j_m, 0.0


def four_spin_period(j_m: float) -> float:
    return math.pi / (2.0 * j_m)


def four_spin_hamiltonian(params: FourSpinParams) -> SparseOperator:
    """The 16x16 Hamiltonian in the full basis (reference for any parameters)."""
    return build_composite_hamiltonian(params.composite(), build_full_basis(4))
