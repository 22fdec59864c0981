"""Finite-size scaling of the optimal coupling, asymmetric splits and the
Kondo/dimer comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..model import IMPURITY_COUPLINGS, J2_CRITICAL, ChainSpec, impurity_coupling_for
from ..solver import SolverConfig
from .quench import OptimizationResult, default_jm_grid, optimize_jm, optimize_jm_refined


def linear_fit(x, y) -> tuple[float, float, float]:
    """Least-squares ``y = slope * x + intercept``; returns ``(slope, intercept, r2)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


@dataclass
class PhiFit:
    points: list[tuple[int, float]]  # (N, Phi(N))
    slope: float
    intercept: float
    r_squared: float
    j_inf: float | None = None


def fit_phi_scaling(results, j_primes, alpha: float | None = None) -> PhiFit:
    """Fit ``Phi(N) = j_m_opt / (J'_L + J'_R)`` linearly against ``log^2(N/2)``.

    ``results`` is a list of ``(N, OptimizationResult)``; ``j_primes`` gives per
    point either the common impurity coupling of a symmetric pair or a
    ``(J'_L, J'_R)`` tuple.  With ``alpha`` the asymptotic coupling
    ``slope * alpha**2`` is reported as ``j_inf``.
    """
    if len(results) < 3:
        raise ValueError(f"need at least 3 points for the scaling fit, got {len(results)}")
    if len(j_primes) != len(results):
        raise ValueError("j_primes must align with results")
    points = []
    for (n, res), jp in zip(results, j_primes):
        total = sum(jp) if isinstance(jp, (tuple, list)) else 2.0 * jp
        phi = res.j_m_opt / total
        if not phi > 0:
            raise ValueError(f"non-positive Phi at N={n}")
        points.append((int(n), float(phi)))
    x = [math.log(n / 2) ** 2 for n, _ in points]
    slope, intercept, r2 = linear_fit(x, [p for _, p in points])
    j_inf = slope * alpha**2 if alpha is not None else None
    return PhiFit(points, slope, intercept, r2, j_inf)


def phi_reference(j_m: float, n_sites: int) -> float:
    """``Phi`` of a symmetric ``n_sites`` composite from a quoted optimal coupling.

    Each chain has ``n_sites // 2`` spins and its tabulated impurity coupling,
    e.g. ``phi_reference(0.97, 32) = 0.97 / (2 * 0.220)``.
    """
    return j_m / (2.0 * impurity_coupling_for(n_sites // 2))


def alpha_from_table() -> dict[int, float]:
    """``alpha = sqrt(J') * ln(N_k - 1)`` per tabulated chain length (diagnostic)."""
    return {n: math.sqrt(jp) * math.log(n - 1) for n, jp in sorted(IMPURITY_COUPLINGS.items())}


def default_t_max(n_sites: int, j2: float = 0.0) -> float:
    """A horizon safely past the first peak for ED-scale systems."""
    if j2 > J2_CRITICAL:
        return 1.0 * n_sites + 4.0
    return 0.35 * n_sites + 3.0


@dataclass
class AsymmetricRow:
    n_left: int
    ratio: float
    t_star: float
    e_max: float
    j_m_opt: float


def asymmetric_sweep(n_sites: int, splits, cfg: SolverConfig = SolverConfig(), *,
                     jm_grid=None, t_max: float | None = None, fine_step: float | None = 0.01,
                     j2: float = 0.0, workers: int = 1) -> list[AsymmetricRow]:
    """Optimize the junction for each left/right split of an ``n_sites`` chain."""
    rows = []
    grid = default_jm_grid() if jm_grid is None else jm_grid
    t_max = default_t_max(n_sites, j2) if t_max is None else t_max
    for nl in splits:
        if nl % 2 or not 2 <= nl <= n_sites - 2:
            raise ValueError(f"invalid split N_L={nl} for N={n_sites}")
        left = ChainSpec.from_table(nl, j2)
        right = ChainSpec.from_table(n_sites - nl, j2)
        res = _optimize(left, right, grid, t_max, cfg, fine_step, workers)
        rows.append(AsymmetricRow(nl, nl / n_sites, res.t_star, res.e_max, res.j_m_opt))
    return sorted(rows, key=lambda r: r.ratio)


def _optimize(left, right, grid, t_max, cfg, fine_step, workers) -> OptimizationResult:
    if fine_step:
        return optimize_jm_refined(left, right, grid, t_max, cfg, fine_step=fine_step,
                                   workers=workers)
    return optimize_jm(left, right, grid, t_max, cfg, workers=workers)


@dataclass
class RegimeRow:
    n_sites: int
    e_max_k: float = float("nan")
    e_max_d: float = float("nan")
    t_star_k: float = float("nan")
    t_star_d: float = float("nan")
    j_m_k: float = float("nan")
    j_m_d: float = float("nan")
    errors: dict = field(default_factory=dict)


def regime_comparison(ns, j2_kondo: float = 0.0, j2_dimer: float = 0.42,
                      cfg: SolverConfig = SolverConfig(), *, jm_grid=None,
                      fine_step: float | None = 0.01, workers: int = 1) -> list[RegimeRow]:
    """Symmetric-split optimum in both regimes with the tabulated impurity couplings.

    A failing cell is recorded in ``row.errors`` and left as NaN.
    """
    grid = default_jm_grid() if jm_grid is None else jm_grid
    rows = []
    for n in ns:
        row = RegimeRow(n)
        for tag, j2 in (("k", j2_kondo), ("d", j2_dimer)):
            try:
                chain = ChainSpec.from_table(n // 2, j2)
                res = _optimize(chain, chain, grid, default_t_max(n, j2), cfg, fine_step, workers)
            except Exception as exc:  # noqa: BLE001 - reported per cell
                row.errors[tag] = f"{type(exc).__name__}: {exc}"
                continue
            setattr(row, f"e_max_{tag}", res.e_max)
            setattr(row, f"t_star_{tag}", res.t_star)
            setattr(row, f"j_m_{tag}", res.j_m_opt)
        rows.append(row)
    return rows


@dataclass
class ScalingReport:
    results: list[tuple[int, OptimizationResult]]
    j_primes: list[float]
    fit: PhiFit
    t_star_fit: tuple[float, float, float]  # slope, intercept, r2 of t* against N


def scaling_study(ns, cfg: SolverConfig = SolverConfig(), *, jm_grid=None,
                  fine_step: float | None = 0.01, alpha: float | None = None,
                  workers: int = 1) -> ScalingReport:
    """Symmetric Kondo-regime optimum for each total length, plus both fits."""
    grid = default_jm_grid() if jm_grid is None else jm_grid
    results, jps = [], []
    for n in ns:
        chain = ChainSpec.from_table(n // 2)
        results.append((n, _optimize(chain, chain, grid, default_t_max(n), cfg, fine_step,
                                     workers)))
        jps.append(chain.j_prime)
    fit = fit_phi_scaling(results, jps, alpha)
    t_fit = linear_fit([n for n, _ in results], [r.t_star for _, r in results])
    return ScalingReport(results, jps, fit, t_fit)
