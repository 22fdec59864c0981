import numpy as np
import pytest

from kondo_router.errors import CapacityError
from kondo_router.experiments import (NoiseSpec, dephasing_master_equation, extract_peak,
                                      field_operator, random_fields, run_dephasing,
                                      run_quench, run_random_field)
from kondo_router.model import ChainSpec, CompositeSpec
from kondo_router.solver import SolverConfig

from conftest import SX, SY, SZ, site_op

CFG = SolverConfig()
K4 = ChainSpec.from_table(4)
SMALL = CompositeSpec(ChainSpec(2, 0.3), ChainSpec(2, 0.3), 0.6)


@pytest.mark.parametrize("kwargs", [dict(kind="thermal"), dict(kind="dephasing", gamma=-1),
                                    dict(kind="random_field", h_mag=-0.1),
                                    dict(kind="dephasing", n_samples=0),
                                    dict(kind="random_field", field_distribution="cauchy")])
def test_noise_spec_validation(kwargs):
    with pytest.raises(ValueError):
        NoiseSpec(**kwargs)


def test_kind_mismatch():
    with pytest.raises(ValueError):
        run_dephasing(SMALL, NoiseSpec("random_field", h_mag=0.1), 1.0)
    with pytest.raises(ValueError):
        run_random_field(SMALL, NoiseSpec("dephasing", gamma=0.1), 1.0)


def test_zero_noise_is_exactly_noiseless():
    comp = CompositeSpec(K4, K4, 0.78)
    ref = run_quench(comp, 3.0, CFG)
    for trace in (run_dephasing(comp, NoiseSpec("dephasing", gamma=0.0, n_samples=7), 3.0),
                  run_random_field(comp, NoiseSpec("random_field", h_mag=0.0, n_samples=7), 3.0)):
        assert np.array_equal(trace.concurrence, ref.concurrence)
        assert np.array_equal(trace.energy, ref.energy)


def test_trajectories_match_master_equation():
    gamma, t_max = 0.05, 3.0
    cfg = SolverConfig(dt=0.1)
    exact = dephasing_master_equation(SMALL, gamma, t_max, cfg)
    assert np.allclose(exact.norm, 1, atol=1e-10)
    # the noise visibly lowers the resonant peak from 1
    assert 0.5 < exact.concurrence.max() < 0.8
    traj = run_dephasing(SMALL, NoiseSpec("dephasing", gamma=gamma, n_samples=1000, seed=5),
                         t_max, cfg)
    # sampling error of a 1000-trajectory average is a few 1e-2
    assert np.max(np.abs(traj.concurrence - exact.concurrence)) < 0.05
    assert np.max(np.abs(traj.energy - exact.energy)) < 0.15
    assert np.allclose(traj.norm, 1, atol=1e-10)


def test_master_equation_without_noise_is_unitary():
    cfg = SolverConfig(dt=0.1)
    a = dephasing_master_equation(CompositeSpec(K4, K4, 0.78), 0.0, 3.0, cfg)
    b = run_quench(CompositeSpec(K4, K4, 0.78), 3.0, cfg)
    assert np.max(np.abs(a.concurrence - b.concurrence)) < 1e-8


def test_dephasing_is_seeded_and_worker_independent():
    noise = NoiseSpec("dephasing", gamma=0.05, n_samples=6, seed=11)
    comp = CompositeSpec(K4, K4, 0.78)
    a = run_dephasing(comp, noise, 2.0, CFG)
    b = run_dephasing(comp, noise, 2.0, CFG, workers=2)
    assert np.array_equal(a.concurrence, b.concurrence)
    c = run_dephasing(comp, NoiseSpec("dephasing", gamma=0.05, n_samples=6, seed=12), 2.0, CFG)
    assert not np.array_equal(a.concurrence, c.concurrence)


def test_dephasing_peak_monotone_in_gamma():
    comp = CompositeSpec(K4, K4, 0.78)
    peaks = [extract_peak(run_dephasing(comp, NoiseSpec("dephasing", gamma=g, n_samples=40,
                                                        seed=3), 3.5, CFG))[1]
             for g in (0.0, 0.005, 0.01)]
    assert peaks[0] >= peaks[1] >= peaks[2]


def test_random_fields_distributions():
    g = np.random.default_rng(0)
    h = random_fields(2000, 0.05, g)
    assert np.allclose(np.linalg.norm(h, axis=1), 0.05)
    assert np.allclose(h.mean(axis=0) / 0.05, 0, atol=0.06)
    hg = random_fields(20000, 0.05, g, "gaussian")
    assert np.mean(np.sum(hg**2, axis=1)) == pytest.approx(0.05**2, rel=0.03)


def test_field_operator_matches_kron():
    n = 3
    fields = random_fields(n, 0.7, np.random.default_rng(1))
    dense = sum(hx * site_op(SX, i + 1, n) + hy * site_op(SY, i + 1, n)
                + hz * site_op(SZ, i + 1, n) for i, (hx, hy, hz) in enumerate(fields))
    op = field_operator(n, fields)
    assert np.allclose(op.toarray(), dense, atol=1e-14)


def test_random_field_capacity():
    big = CompositeSpec(ChainSpec.from_table(8), ChainSpec.from_table(8), 0.9)
    with pytest.raises(CapacityError):
        run_random_field(big, NoiseSpec("random_field", h_mag=0.05, n_samples=1), 1.0)


def test_random_field_trace_properties():
    comp = CompositeSpec(K4, K4, 0.78)
    noise = NoiseSpec("random_field", h_mag=0.05, n_samples=4, seed=2)
    a = run_random_field(comp, noise, 3.0, CFG)
    b = run_random_field(comp, noise, 3.0, CFG, workers=2)
    assert np.array_equal(a.concurrence, b.concurrence)
    assert np.allclose(a.norm, 1, atol=1e-10)
    assert a.energy_drift() < 1e-8  # each realization is unitary with a static H
    clean = extract_peak(run_quench(comp, 3.0, CFG))[1]
    assert extract_peak(a)[1] < clean


def test_random_field_self_averaging():
    comp = CompositeSpec(K4, K4, 0.78)
    peaks = [extract_peak(run_random_field(comp, NoiseSpec("random_field", h_mag=0.05,
                                                           n_samples=100, seed=s), 3.0, CFG))[1]
             for s in (100, 200)]
    assert abs(peaks[0] - peaks[1]) < 0.01 * peaks[0]
