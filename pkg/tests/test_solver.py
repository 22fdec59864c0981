import warnings

import numpy as np
import pytest

from kondo_router.errors import ConvergenceError, PropagationError
from kondo_router.experiments import initial_state
from kondo_router.model import (ChainSpec, CompositeSpec, StateVector, build_chain_hamiltonian,
                                build_composite_hamiltonian, build_sector_basis)
from kondo_router.observables import total_spin_squared
from kondo_router.solver import (DENSE_DIMENSION_LIMIT, NearDegeneracyWarning, SolverConfig,
                                 evolve_dense_oracle, evolve_krylov, expectation, ground_state,
                                 lanczos_ground_state, propagate)


def _chain(n, j2=0.0):
    return ChainSpec.from_table(n, j2) if n > 2 else ChainSpec(n, 0.4, j2)


def _composite(nl, nr, jm=0.8, j2=0.0):
    comp = CompositeSpec(_chain(nl, j2), _chain(nr, j2), jm)
    basis = build_sector_basis(comp.n_sites, comp.n_sites // 2)
    return comp, build_composite_hamiltonian(comp, basis)


@pytest.mark.parametrize("kwargs", [dict(lanczos_tol=0), dict(dt=-1), dict(krylov_dim=2),
                                    dict(step_tol=0), dict(lanczos_max_iter=0)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SolverConfig(**kwargs)


def test_two_site_ground_energy():
    H = build_chain_hamiltonian(ChainSpec(2, 0.3), build_sector_basis(2, 1))
    e, psi = ground_state(H)
    assert e == pytest.approx(-0.9, abs=1e-12)
    assert total_spin_squared(psi) == pytest.approx(0, abs=1e-12)


@pytest.mark.parametrize("n,jp,j2", [(4, 1.0, 0.0), (8, 0.26, 0.0), (10, 0.25, 0.42),
                                     (12, 0.24, 0.0)])
def test_lanczos_matches_dense(n, jp, j2):
    H = build_chain_hamiltonian(ChainSpec(n, jp, j2), build_sector_basis(n, n // 2))
    res = lanczos_ground_state(H)
    w = np.linalg.eigvalsh(H.toarray())
    assert res.energy == pytest.approx(w[0], abs=1e-10)
    assert res.residual < 1e-10
    assert np.linalg.norm(H @ res.state.amplitudes - res.energy * res.state.amplitudes) < 1e-10


def test_lanczos_ground_state_is_singlet():
    _, psi = ground_state(build_chain_hamiltonian(ChainSpec(8, 0.300),
                                                  build_sector_basis(8, 4)))
    assert total_spin_squared(psi) < 1e-8


def test_lanczos_deterministic():
    H = build_chain_hamiltonian(ChainSpec(10, 0.25), build_sector_basis(10, 5))
    a = lanczos_ground_state(H).state.amplitudes
    b = lanczos_ground_state(H).state.amplitudes
    assert np.array_equal(a, b)


def test_lanczos_nonconvergence_reports_residual():
    H = build_chain_hamiltonian(ChainSpec(12, 0.24), build_sector_basis(12, 6))
    with pytest.raises(ConvergenceError) as info:
        lanczos_ground_state(H, SolverConfig(lanczos_max_iter=3))
    assert info.value.residual > 0


def test_near_degeneracy_flagged():
    # a single start vector cannot resolve an exact degeneracy, so split it by 1e-9
    import scipy.sparse as sp
    from kondo_router.model import SparseOperator
    b = build_sector_basis(4, 2)
    H = SparseOperator(sp.diags([-1.0, -1.0 + 1e-9, 0.0, 1.0, 2.0, 3.0]).tocsr(), b)
    with pytest.warns(NearDegeneracyWarning):
        e, _ = ground_state(H)
    assert e == pytest.approx(-1.0)


def test_krylov_zero_step_is_identity():
    _, H = _composite(4, 4)
    psi, _ = initial_state(_composite(4, 4)[0], SolverConfig())
    assert np.array_equal(evolve_krylov(H, psi, 0.0).amplitudes, psi.amplitudes)


def test_krylov_eigenvector_picks_up_phase():
    _, H = _composite(4, 2)
    e, v = ground_state(H)
    for dt in (0.05, 1.0, 7.3):
        out = evolve_krylov(H, v, dt)
        assert np.allclose(out.amplitudes, np.exp(-1j * e * dt) * v.amplitudes, atol=1e-10)


def test_krylov_matches_dense_n10():
    comp, H = _composite(6, 4, 0.9)
    psi0, _ = initial_state(comp, SolverConfig())
    psi = psi0
    for _ in range(100):
        psi = evolve_krylov(H, psi, 0.05)
    ref = evolve_dense_oracle(H, psi0, 5.0)
    assert abs(psi.overlap(ref)) > 1 - 1e-8


def test_krylov_large_step_substeps():
    comp, H = _composite(4, 4, 1.1)
    psi0, _ = initial_state(comp, SolverConfig())
    out, raw = propagate(H, psi0, 10.0, SolverConfig(krylov_dim=8))
    assert abs(out.overlap(evolve_dense_oracle(H, psi0, 10.0))) > 1 - 1e-8
    assert abs(raw - 1) < 1e-12


def test_krylov_unreachable_tolerance_raises():
    _, H = _composite(4, 4)
    psi0, _ = initial_state(_composite(4, 4)[0], SolverConfig())
    cfg = SolverConfig(krylov_dim=3, step_tol=1e-300, min_substep=1e-3)
    with pytest.raises(PropagationError):
        propagate(H, psi0, 1.0, cfg)


def test_norm_drift_per_step():
    comp, H = _composite(6, 6)
    psi, _ = initial_state(comp, SolverConfig())
    for k in range(1, 41):
        psi, raw = propagate(H, psi, 0.05)
        assert abs(raw - 1) < 1e-10
        assert abs(psi.norm() - 1) < 1e-12


def test_dense_oracle_guard_and_conservation():
    comp, H = _composite(4, 4)
    psi0, _ = initial_state(comp, SolverConfig())
    assert np.allclose(evolve_dense_oracle(H, psi0, 0.0).amplitudes, psi0.amplitudes, atol=1e-14)
    e0 = expectation(H, psi0)
    for t in (0.7, 3.0, 11.0):
        assert abs(expectation(H, evolve_dense_oracle(H, psi0, t)) - e0) < 1e-10

    class Huge:
        dimension = DENSE_DIMENSION_LIMIT + 1
    with pytest.raises(ValueError):
        evolve_dense_oracle(Huge(), psi0, 1.0)


def test_basis_mismatch_rejected():
    _, H = _composite(4, 4)
    other = StateVector(build_sector_basis(2, 1), np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        evolve_krylov(H, other, 0.1)
    with pytest.raises(ValueError):
        expectation(H, other)


def test_expectation_values():
    H = build_chain_hamiltonian(ChainSpec(2, 1.0), build_sector_basis(2, 1))
    singlet = StateVector(H.basis, np.array([1, -1]) / np.sqrt(2))
    assert expectation(H, singlet) == pytest.approx(-3.0)
    e, g = ground_state(build_chain_hamiltonian(ChainSpec(8, 0.26), build_sector_basis(8, 4)))
    Hc = build_chain_hamiltonian(ChainSpec(8, 0.26), build_sector_basis(8, 4))
    assert expectation(Hc, g) == pytest.approx(e, abs=1e-10)


def test_complex_operator_evolution():
    # real H plus an imaginary antisymmetric part exercises the complex matvec
    import scipy.sparse as sp
    from kondo_router.model import SparseOperator, build_full_basis
    rng = np.random.default_rng(4)
    A = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    Hd = (A + A.conj().T) / 2
    H = SparseOperator(sp.csr_matrix(Hd), build_full_basis(3))
    psi = StateVector.normalized(H.basis, rng.normal(size=8) + 0j)
    ref = evolve_dense_oracle(H, psi, 2.0)
    assert abs(evolve_krylov(H, psi, 2.0).overlap(ref)) > 1 - 1e-10
    e, g = ground_state(H)
    assert e == pytest.approx(np.linalg.eigvalsh(Hd)[0], abs=1e-10)
