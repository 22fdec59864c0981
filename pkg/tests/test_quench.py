import math

import numpy as np
import pytest

from kondo_router.errors import NoPeakError, OptimizationError
from kondo_router.experiments import (OptimizationResult, QuenchTrace, extract_peak,
                                      initial_state, optimize_jm, optimize_jm_refined,
                                      run_quench, time_grid)
from kondo_router.experiments.quench import _first_peak_index
from kondo_router.foursite import FourSpinParams, four_spin_concurrence
from kondo_router.model import ChainSpec, CompositeSpec
from kondo_router.observables import total_spin_squared
from kondo_router.solver import SolverConfig

CFG = SolverConfig()
K4 = ChainSpec.from_table(4)


def _synthetic(values, dt):
    values = np.asarray(values, dtype=float)
    n = len(values)
    comp = FourSpinParams.resonant(0.5, 0.5).composite()
    return QuenchTrace(dt * np.arange(n), values, np.zeros(n), np.ones(n), comp, CFG)


def test_time_grid():
    assert np.allclose(time_grid(1.0, 0.25), [0, 0.25, 0.5, 0.75, 1.0])
    assert len(time_grid(6.0, 0.05)) == 121


def test_trace_validation():
    comp = FourSpinParams.resonant(0.5, 0.5).composite()
    with pytest.raises(ValueError):
        QuenchTrace(np.array([0.0, 1.0]), np.zeros(3), np.zeros(2), np.ones(2), comp, CFG)
    with pytest.raises(ValueError):
        QuenchTrace(np.array([0.0, 0.0]), np.zeros(2), np.zeros(2), np.ones(2), comp, CFG)


@pytest.mark.parametrize("j1p,j2p", [(0.5, 0.5), (0.3, 0.6), (1.0, 0.2)])
def test_four_spin_quench_matches_closed_form(j1p, j2p):
    params = FourSpinParams.resonant(j1p, j2p)
    trace = run_quench(params.composite(), 6.0, CFG)
    exact = [four_spin_concurrence(params.j_m, t) for t in trace.times]
    assert np.max(np.abs(trace.concurrence - exact)) < 1e-8


def test_decoupled_trace_is_stationary():
    trace = run_quench(CompositeSpec(K4, K4, 0.0), 3.0, CFG)
    assert np.all(trace.concurrence == trace.concurrence[0])
    assert trace.energy_drift() < 1e-12


@pytest.mark.parametrize("nl,nr,jm,j2", [(4, 4, 0.78, 0.0), (6, 4, 0.9, 0.0), (4, 4, 0.7, 0.42)])
def test_trace_invariants_and_conservation(nl, nr, jm, j2):
    comp = CompositeSpec(ChainSpec.from_table(nl, j2), ChainSpec.from_table(nr, j2), jm)
    trace = run_quench(comp, 8.0, CFG)
    assert len(trace) == 161
    assert np.all((trace.concurrence >= 0) & (trace.concurrence <= 1))
    assert trace.energy_drift() < 1e-8
    assert trace.norm_drift() < 1e-10
    assert trace.initial_s2 < 1e-8
    psi0, e0 = initial_state(comp, CFG)
    assert total_spin_squared(psi0) < 1e-8


def test_dense_propagator_agrees():
    comp = CompositeSpec(K4, K4, 0.8)
    a = run_quench(comp, 4.0, CFG)
    b = run_quench(comp, 4.0, CFG, propagator="dense")
    assert np.max(np.abs(a.concurrence - b.concurrence)) < 1e-8
    with pytest.raises(ValueError):
        run_quench(comp, 1.0, CFG, propagator="trotter")


def test_stop_after_peak_is_a_prefix():
    comp = CompositeSpec(K4, K4, 0.78)
    full = run_quench(comp, 8.0, CFG)
    short = run_quench(comp, 8.0, CFG, stop_after_peak=True)
    assert len(short) < len(full)
    assert np.array_equal(short.concurrence, full.concurrence[: len(short)])
    assert extract_peak(short) == extract_peak(full)


def test_extract_peak_closed_form_fine_grid():
    dt = 0.01
    tr = _synthetic([four_spin_concurrence(1.0, t) for t in time_grid(2.0, dt)], dt)
    t_star, e_max = extract_peak(tr)
    assert abs(t_star - math.pi / 4) <= dt / 2
    assert abs(e_max - 1) < 1e-6


def test_extract_peak_closed_form_default_grid():
    dt = 0.05
    tr = _synthetic([four_spin_concurrence(1.0, t) for t in time_grid(2.0, dt)], dt)
    t_star, e_max = extract_peak(tr)
    assert abs(t_star - math.pi / 4) <= dt / 2
    assert abs(e_max - 1) < 1e-4


def test_extract_peak_errors():
    with pytest.raises(NoPeakError):
        extract_peak(_synthetic(np.zeros(50), 0.1))
    with pytest.raises(NoPeakError):
        extract_peak(_synthetic(np.linspace(0, 1, 50), 0.1))
    with pytest.raises(NoPeakError):
        extract_peak(_synthetic([0.0, 0.5], 0.1))


def test_first_peak_skips_small_ripples():
    c = [0, 0.2, 0.38, 0.375, 0.39, 0.6, 0.7, 0.65, 0.4]
    assert _first_peak_index(c) == (6, True)
    assert _first_peak_index([0, 0.01, 0.0, 0.3, 0.2]) == (3, True)
    assert _first_peak_index([0, 0.3, 0.29]) == (1, False)
    assert _first_peak_index([0, 0.1, 0.2]) == (None, False)


def test_second_peak_recurs():
    for nl, jm in [(4, 0.78), (6, 0.88)]:
        trace = run_quench(CompositeSpec(ChainSpec.from_table(nl), ChainSpec.from_table(nl), jm),
                           4.2 * (nl + 1), CFG)
        t_star, e_max = extract_peak(trace)
        c, t = trace.concurrence, trace.times
        later = (t > 2 * t_star) & (t < 4 * t_star)
        k = np.argmax(np.where(later, c, -1))
        assert abs(t[k] - 3 * t_star) < 0.3 * t_star
        assert abs(c[k] - e_max) < 0.25 * e_max


def test_optimize_four_spin_selects_resonance():
    left, right = ChainSpec(2, 0.3), ChainSpec(2, 0.3)
    res = optimize_jm(left, right, [0.4, 0.5, 0.6, 0.7, 0.8], 4.0, SolverConfig(dt=0.01))
    assert res.j_m_opt == pytest.approx(0.6)
    assert res.e_max == pytest.approx(1.0, abs=1e-6)
    assert res.t_star == pytest.approx(math.pi / 2.4, abs=0.005)
    assert all(res.e_max >= p[1] for p in res.points if p)


def test_optimize_single_point_and_validation():
    res = optimize_jm(K4, K4, [0.78], 6.0, CFG)
    assert res.grid == [0.78] and res.j_m_opt == 0.78
    assert (res.t_star, res.e_max) == res.points[0]
    with pytest.raises(ValueError):
        optimize_jm(K4, K4, [], 6.0, CFG)
    with pytest.raises(ValueError):
        optimize_jm(K4, K4, [0.8, 0.7], 6.0, CFG)
    with pytest.raises(OptimizationError):
        optimize_jm(K4, K4, [0.0, 0.8], 0.5, CFG)
    with pytest.raises(ValueError):
        OptimizationResult(0.5, 0.0, 0.5, [0.5], [(0.0, 0.5)])


def test_optimize_ties_go_to_smaller_coupling():
    from kondo_router.experiments.quench import _result_from_points
    res = _result_from_points([0.5, 0.6, 0.7], [(1.0, 0.9), None, (1.2, 0.9)])
    assert res.j_m_opt == 0.5


def test_optimize_grid_resolution_stable():
    coarse = optimize_jm(K4, K4, np.arange(0.6, 1.01, 0.04), 6.0, CFG)
    fine = optimize_jm(K4, K4, np.arange(0.6, 1.01, 0.02), 6.0, CFG)
    assert abs(coarse.j_m_opt - fine.j_m_opt) <= 0.04 + 1e-9


def test_refined_optimization_merges_grids():
    res = optimize_jm_refined(K4, K4, [0.6, 0.7, 0.8, 0.9, 1.0], 6.0, CFG, fine_step=0.02)
    assert res.grid == sorted(res.grid)
    assert {0.6, 0.7, 0.8, 0.9, 1.0} <= set(res.grid)
    assert len(res.grid) > 5
    assert res.e_max == max(p[1] for p in res.points if p)


def test_parallel_matches_serial():
    grid = [0.7, 0.75, 0.8]
    a = optimize_jm(K4, K4, grid, 5.0, CFG, workers=1)
    b = optimize_jm(K4, K4, grid, 5.0, CFG, workers=2)
    assert a.points == b.points
