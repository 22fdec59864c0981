"""Quench traces, first-peak extraction and junction-coupling optimization."""

from __future__ import annotations

import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import NoPeakError, OptimizationError
from ..model import (ChainSpec, CompositeSpec, StateVector, build_chain_hamiltonian,
                     build_composite_hamiltonian, build_sector_basis, embed_product_state)
from ..observables import concurrence, reduced_density_matrix, total_spin_squared
from ..solver import SolverConfig, evolve_dense_oracle, expectation, ground_state, propagate

#: Peaks lower than this are treated as numerical ripple, not the first oscillation.
MIN_PEAK_HEIGHT = 0.05
#: Drop below a local maximum that marks it as the peak rather than a ripple.
MIN_PEAK_PROMINENCE = 0.02


def default_jm_grid() -> np.ndarray:
    return np.round(np.arange(0.40, 1.6 + 1e-9, 0.02), 10)


def time_grid(t_max: float, dt: float) -> np.ndarray:
    n = int(math.floor(t_max / dt + 1e-9))
    return dt * np.arange(n + 1)


@dataclass
class QuenchTrace:
    times: np.ndarray
    concurrence: np.ndarray
    energy: np.ndarray
    norm: np.ndarray
    spec: CompositeSpec
    config: SolverConfig
    initial_s2: float = float("nan")
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.times)
        if not (len(self.concurrence) == len(self.energy) == len(self.norm) == n):
            raise ValueError("trace columns have different lengths")
        if n and (self.times[0] != 0 or np.any(np.diff(self.times) <= 0)):
            raise ValueError("times must start at 0 and increase strictly")

    def __len__(self):
        return len(self.times)

    def energy_drift(self) -> float:
        """Largest relative deviation of the energy from its initial value."""
        e0 = self.energy[0]
        return float(np.max(np.abs(self.energy - e0)) / max(abs(e0), 1e-300))

    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm - 1.0)))


@functools.lru_cache(maxsize=64)
def chain_ground_state(spec: ChainSpec, cfg: SolverConfig) -> tuple[float, StateVector]:
    """Ground state of one chain in its zero-magnetization sector."""
    basis = build_sector_basis(spec.n_sites, spec.n_sites // 2)
    return ground_state(build_chain_hamiltonian(spec, basis), cfg)


def initial_state(comp: CompositeSpec, cfg: SolverConfig, basis=None) -> tuple[StateVector, float]:
    """Product of the decoupled chain ground states and its energy ``E_L + E_R``."""
    el, gl = chain_ground_state(comp.left, cfg)
    er, gr = chain_ground_state(comp.right, cfg)
    if basis is None:
        basis = build_sector_basis(comp.n_sites, comp.n_sites // 2)
    return embed_product_state(gl, gr, basis), el + er


def _first_peak_index(c, min_height: float = MIN_PEAK_HEIGHT,
                      min_prominence: float = MIN_PEAK_PROMINENCE) -> tuple[int | None, bool]:
    """Index of the first qualifying local maximum and whether it is confirmed.

    A local maximum at or above ``min_height`` is confirmed once the trace
    falls ``min_prominence`` below it before climbing above it; ripples that
    are overtaken are skipped.  An unconfirmed candidate at the end of the
    trace is returned with ``confirmed=False``.
    """
    c = np.asarray(c, dtype=float)
    i = 1
    while i < len(c) - 1:
        if c[i] >= min_height and c[i] >= c[i - 1] and c[i] > c[i + 1]:
            for j in range(i + 1, len(c)):
                if c[j] > c[i]:
                    break
                if c[j] <= c[i] - min_prominence:
                    return i, True
            else:
                return i, False
            i = j
            continue
        i += 1
    return None, False


def run_quench(comp: CompositeSpec, t_max: float, cfg: SolverConfig = SolverConfig(), *,
               stop_after_peak: bool = False, propagator: str = "krylov",
               min_height: float = MIN_PEAK_HEIGHT) -> QuenchTrace:
    """Evolve the decoupled ground states under the coupled Hamiltonian.

    The boundary concurrence (sites 1 and N) is sampled every ``cfg.dt``.
    With ``stop_after_peak`` the evolution ends once the first concurrence
    maximum is confirmed, which is all that peak extraction needs.
    """
    if propagator not in ("krylov", "dense"):
        raise ValueError(f"unknown propagator {propagator!r}")
    n = comp.n_sites
    basis = build_sector_basis(n, n // 2)
    H = build_composite_hamiltonian(comp, basis)
    psi0, _ = initial_state(comp, cfg, basis)
    times = time_grid(t_max, cfg.dt)
    conc, energy, norm = [], [], []
    psi, raw = psi0, 1.0
    for k, t in enumerate(times):
        if k:
            if propagator == "krylov":
                psi, raw = propagate(H, psi, cfg.dt, cfg)
            else:
                psi = evolve_dense_oracle(H, psi0, t)
        conc.append(concurrence(reduced_density_matrix(psi, 1, n)))
        energy.append(expectation(H, psi))
        norm.append(raw)
        if stop_after_peak and k >= 2 and _first_peak_index(conc, min_height)[1]:
            times = times[: k + 1]
            break
    return QuenchTrace(times, np.array(conc), np.array(energy), np.array(norm), comp, cfg,
                       initial_s2=total_spin_squared(psi0))


def extract_peak(trace: QuenchTrace, min_height: float = MIN_PEAK_HEIGHT) -> tuple[float, float]:
    """Time and height of the first concurrence maximum.

    The discrete maximum is refined with a parabola through it and its two
    neighbours.
    """
    c = np.asarray(trace.concurrence, dtype=float)
    t = np.asarray(trace.times, dtype=float)
    if len(c) < 3:
        raise NoPeakError("trace too short to contain an interior maximum")
    i, _ = _first_peak_index(c, min_height)
    if i is None:
        raise NoPeakError(f"no interior maximum above {min_height} in the trace")
    left, mid, right = c[i - 1], c[i], c[i + 1]
    curv = left - 2 * mid + right
    if curv >= 0:
        return float(t[i]), float(mid)
    offset = 0.5 * (left - right) / curv
    h = 0.5 * (t[i + 1] - t[i - 1])
    return float(t[i] + offset * h), float(mid - 0.25 * (left - right) * offset)


@dataclass
class OptimizationResult:
    j_m_opt: float
    t_star: float
    e_max: float
    grid: list[float]
    points: list[tuple[float, float] | None]  # (t_star, e_max) per grid value

    def __post_init__(self):
        if not self.t_star > 0:
            raise ValueError("t_star must be positive")


def peak_for(left: ChainSpec, right: ChainSpec, j_m: float, t_max: float,
             cfg: SolverConfig, min_height: float = MIN_PEAK_HEIGHT):
    """``(t_star, e_max)`` of one quench, or ``None`` when there is no peak."""
    trace = run_quench(CompositeSpec(left, right, float(j_m)), t_max, cfg,
                       stop_after_peak=True, min_height=min_height)
    try:
        return extract_peak(trace, min_height)
    except NoPeakError:
        return None


def _map(fn, items, workers: int):
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers or None) as pool:
        return list(pool.map(fn, items))


def _result_from_points(grid, points) -> OptimizationResult:
    best = None
    for jm, pt in zip(grid, points):
        if pt is not None and (best is None or pt[1] > best[2]):
            best = (jm, *pt)
    if best is None:
        raise OptimizationError("no grid point produced a concurrence peak")
    return OptimizationResult(float(best[0]), best[1], best[2], list(grid), list(points))


def optimize_jm(left: ChainSpec, right: ChainSpec, jm_grid, t_max: float,
                cfg: SolverConfig = SolverConfig(), *, workers: int = 1,
                min_height: float = MIN_PEAK_HEIGHT) -> OptimizationResult:
    """Sweep ``jm_grid`` and keep the coupling with the highest first peak.

    Ties go to the smaller coupling.  ``workers`` > 1 runs grid points in
    separate processes (0 means one per CPU).
    """
    grid = [float(x) for x in jm_grid]
    if not grid:
        raise ValueError("jm_grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("jm_grid must be strictly ascending")
    fn = functools.partial(peak_for, left, right, t_max=t_max, cfg=cfg, min_height=min_height)
    return _result_from_points(grid, _map(fn, grid, workers))


def optimize_jm_refined(left: ChainSpec, right: ChainSpec, coarse_grid, t_max: float,
                        cfg: SolverConfig = SolverConfig(), *, fine_step: float = 0.01,
                        workers: int = 1, min_height: float = MIN_PEAK_HEIGHT
                        ) -> OptimizationResult:
    """Coarse sweep followed by a fine sweep around the coarse optimum.

    The returned grid is the sorted union of both sweeps.
    """
    coarse = optimize_jm(left, right, coarse_grid, t_max, cfg, workers=workers,
                         min_height=min_height)
    grid = coarse.grid
    i = grid.index(coarse.j_m_opt)
    lo = grid[i - 1] if i > 0 else grid[i]
    hi = grid[i + 1] if i + 1 < len(grid) else grid[i]
    known = dict(zip(grid, coarse.points))
    fine = [float(x) for x in np.round(np.arange(lo, hi + 1e-9, fine_step), 10)
            if not any(abs(x - g) < 1e-9 for g in known)]
    fn = functools.partial(peak_for, left, right, t_max=t_max, cfg=cfg, min_height=min_height)
    known.update(zip(fine, _map(fn, fine, workers)))
    merged = sorted(known)
    return _result_from_points(merged, [known[g] for g in merged])
