"""Quenches under dephasing and under static random local fields.

Dephasing is Markovian with jump operators ``sqrt(gamma) sigma^z_i`` on every
site, i.e. the master equation

    d rho / dt = -i [H, rho] + gamma * sum_i (sigma^z_i rho sigma^z_i - rho).

Because ``sum_i L_i^dag L_i = N gamma`` is a constant, the no-jump evolution
is unitary up to a uniform decay and jumps form a Poisson process of rate
``N gamma`` with uniformly chosen sites.  Trajectories are sampled exactly
from that process; :func:`dephasing_master_equation` integrates the master
equation directly and serves as the reference for small systems.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from ..errors import CapacityError
from ..model import (CompositeSpec, SparseOperator, StateVector, build_composite_hamiltonian,
                     build_full_basis, build_sector_basis)
from ..observables import (concurrence, reduced_density_matrix, reduced_density_matrix_of,
                           total_spin_squared)
from ..solver import SolverConfig, expectation, propagate
from .quench import QuenchTrace, _map, initial_state, run_quench, time_grid

RANDOM_FIELD_MAX_SITES = 14


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    gamma: float = 0.0
    h_mag: float = 0.0
    n_samples: int = 1
    seed: int = 0
    field_distribution: str = "fixed"  # "fixed" magnitude or "gaussian" components

    def __post_init__(self):
        if self.kind not in ("dephasing", "random_field"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.gamma < 0 or self.h_mag < 0:
            raise ValueError("noise strengths must be non-negative")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.field_distribution not in ("fixed", "gaussian"):
            raise ValueError(f"unknown field distribution {self.field_distribution!r}")

    def rng(self, sample: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(sample,)))


def _with_noise_metadata(trace: QuenchTrace, noise: NoiseSpec) -> QuenchTrace:
    trace.metadata["noise"] = noise
    return trace


def _apply_sigma_z(psi: StateVector, site: int) -> StateVector:
    bits = (psi.basis.configurations >> (site - 1)) & 1
    return StateVector(psi.basis, psi.amplitudes * (2.0 * bits - 1.0))


@functools.lru_cache(maxsize=2)
def _sector_setup(comp: CompositeSpec, cfg: SolverConfig):
    n = comp.n_sites
    basis = build_sector_basis(n, n // 2)
    H = build_composite_hamiltonian(comp, basis)
    psi0, _ = initial_state(comp, cfg, basis)
    return H, psi0


def _dephasing_trajectory(sample: int, comp: CompositeSpec, noise: NoiseSpec, t_max: float,
                          cfg: SolverConfig):
    H, psi = _sector_setup(comp, cfg)
    n = comp.n_sites
    times = time_grid(t_max, cfg.dt)
    rng = noise.rng(sample)
    jumps = []
    t = rng.exponential(1.0 / (n * noise.gamma))
    while t <= times[-1]:
        jumps.append((t, int(rng.integers(1, n + 1))))
        t += rng.exponential(1.0 / (n * noise.gamma))
    rhos = np.empty((len(times), 4, 4), dtype=np.complex128)
    energy = np.empty(len(times))
    now, j = 0.0, 0
    for k, tk in enumerate(times):
        while j < len(jumps) and jumps[j][0] <= tk:
            tj, site = jumps[j]
            psi = _apply_sigma_z(propagate(H, psi, tj - now, cfg)[0], site)
            now, j = tj, j + 1
        if tk > now:
            psi = propagate(H, psi, tk - now, cfg)[0]
            now = tk
        rhos[k] = reduced_density_matrix(psi, 1, n)
        energy[k] = expectation(H, psi)
    return rhos, energy


def run_dephasing(comp: CompositeSpec, noise: NoiseSpec, t_max: float,
                  cfg: SolverConfig = SolverConfig(), *, workers: int = 1) -> QuenchTrace:
    """Trajectory-averaged boundary concurrence under uniform site dephasing.

    The two-site density matrices are averaged over ``noise.n_samples``
    trajectories before the concurrence is taken.
    """
    if noise.kind != "dephasing":
        raise ValueError(f"expected a dephasing NoiseSpec, got kind {noise.kind!r}")
    if noise.gamma == 0:
        return _with_noise_metadata(run_quench(comp, t_max, cfg), noise)
    fn = functools.partial(_dephasing_trajectory, comp=comp, noise=noise, t_max=t_max, cfg=cfg)
    samples = _map(fn, list(range(noise.n_samples)), workers)
    rho_sum = np.zeros_like(samples[0][0])
    e_sum = np.zeros_like(samples[0][1])
    for rhos, energy in samples:  # fixed reduction order
        rho_sum += rhos
        e_sum += energy
    rho_avg = rho_sum / noise.n_samples
    _, psi0 = _sector_setup(comp, cfg)
    trace = QuenchTrace(
        time_grid(t_max, cfg.dt),
        np.array([concurrence(r) for r in rho_avg]),
        e_sum / noise.n_samples,
        np.array([np.trace(r).real for r in rho_avg]),
        comp, cfg, initial_s2=total_spin_squared(psi0),
    )
    return _with_noise_metadata(trace, noise)


def dephasing_master_equation(comp: CompositeSpec, gamma: float, t_max: float,
                              cfg: SolverConfig = SolverConfig()) -> QuenchTrace:
    """Reference solution of the dephasing master equation in the sector.

    Dephasing damps the coherence between configurations ``a`` and ``b`` at
    rate ``2 gamma * hamming(a, b)``.  Feasible for sector dimensions up to a
    few hundred.
    """
    H, psi0 = _sector_setup(comp, cfg)
    basis = H.basis
    dim = basis.size
    confs = basis.configurations
    ham = np.bitwise_count(confs[:, None] ^ confs[None, :]).astype(float)
    eye = sp.identity(dim, format="csr")
    Hm = H.matrix
    liouv = -1j * (sp.kron(Hm, eye) - sp.kron(eye, Hm.T)) - sp.diags(2.0 * gamma * ham.ravel())
    rho0 = np.outer(psi0.amplitudes, psi0.amplitudes.conj()).ravel()
    times = time_grid(t_max, cfg.dt)
    states = expm_multiply(liouv.tocsr(), rho0, start=0.0, stop=times[-1],
                           num=len(times), endpoint=True)
    conc, energy, norm = [], [], []
    Hd = Hm.toarray()
    n = comp.n_sites
    for vec in states:
        rho = vec.reshape(dim, dim)
        conc.append(concurrence(reduced_density_matrix_of(rho, basis, 1, n)))
        energy.append(float(np.trace(rho @ Hd).real))
        norm.append(float(np.trace(rho).real))
    return QuenchTrace(times, np.array(conc), np.array(energy), np.array(norm), comp, cfg,
                       initial_s2=total_spin_squared(psi0),
                       metadata={"noise": NoiseSpec("dephasing", gamma=gamma)})


def random_fields(n_sites: int, h_mag: float, rng: np.random.Generator,
                  distribution: str = "fixed") -> np.ndarray:
    """``(n_sites, 3)`` local fields.

    ``"fixed"``: magnitude ``h_mag`` along a uniformly random direction.
    ``"gaussian"``: iid normal components with ``<|h|^2> = h_mag**2``.
    """
    g = rng.standard_normal((n_sites, 3))
    if distribution == "gaussian":
        return g * (h_mag / np.sqrt(3.0))
    return h_mag * g / np.linalg.norm(g, axis=1, keepdims=True)


def field_operator(n_sites: int, fields: np.ndarray) -> SparseOperator:
    """``sum_i h_i . sigma_i`` in the full basis."""
    basis = build_full_basis(n_sites)
    confs = basis.configurations
    dim = basis.size
    diag = np.zeros(dim)
    rows, cols, vals = [], [], []
    for i, (hx, hy, hz) in enumerate(fields):
        bit = (confs >> i) & 1
        diag += hz * (2.0 * bit - 1.0)
        # <flipped|h.sigma|c> = hx + i hy for up -> down, hx - i hy for down -> up
        rows.append(confs ^ (1 << i))
        cols.append(confs)
        vals.append(np.where(bit == 1, hx + 1j * hy, hx - 1j * hy))
    rows.append(confs)
    cols.append(confs)
    vals.append(diag.astype(np.complex128))
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    ).tocsr()
    return SparseOperator(mat, basis)


@functools.lru_cache(maxsize=2)
def _full_setup(comp: CompositeSpec, cfg: SolverConfig):
    basis = build_full_basis(comp.n_sites)
    H0 = build_composite_hamiltonian(comp, basis)
    psi0, _ = initial_state(comp, cfg, basis)
    return H0, psi0


def _field_realization(sample: int, comp: CompositeSpec, noise: NoiseSpec, t_max: float,
                       cfg: SolverConfig):
    H0, psi = _full_setup(comp, cfg)
    n = comp.n_sites
    fields = random_fields(n, noise.h_mag, noise.rng(sample), noise.field_distribution)
    H = H0 + field_operator(n, fields)
    times = time_grid(t_max, cfg.dt)
    conc = np.empty(len(times))
    energy = np.empty(len(times))
    norm = np.empty(len(times))
    raw = 1.0
    for k in range(len(times)):
        if k:
            psi, raw = propagate(H, psi, cfg.dt, cfg)
        conc[k] = concurrence(reduced_density_matrix(psi, 1, n))
        energy[k] = expectation(H, psi)
        norm[k] = raw
    return conc, energy, norm


def run_random_field(comp: CompositeSpec, noise: NoiseSpec, t_max: float,
                     cfg: SolverConfig = SolverConfig(), *, workers: int = 1) -> QuenchTrace:
    """Disorder-averaged concurrence under static random local fields.

    Each realization evolves unitarily in the full ``2**N`` space; the
    concurrence (not the density matrix) is averaged over realizations.
    """
    if noise.kind != "random_field":
        raise ValueError(f"expected a random_field NoiseSpec, got kind {noise.kind!r}")
    if noise.h_mag == 0:
        return _with_noise_metadata(run_quench(comp, t_max, cfg), noise)
    if comp.n_sites > RANDOM_FIELD_MAX_SITES:
        raise CapacityError(
            f"full-space evolution limited to {RANDOM_FIELD_MAX_SITES} sites, got {comp.n_sites}"
        )
    fn = functools.partial(_field_realization, comp=comp, noise=noise, t_max=t_max, cfg=cfg)
    samples = _map(fn, list(range(noise.n_samples)), workers)
    acc = [np.zeros_like(a) for a in samples[0]]
    for sample in samples:
        for a, s in zip(acc, sample):
            a += s
    conc, energy, norm = (a / noise.n_samples for a in acc)
    _, psi0 = _full_setup(comp, cfg)
    trace = QuenchTrace(time_grid(t_max, cfg.dt), conc, energy, norm, comp, cfg,
                        initial_s2=total_spin_squared(psi0))
    return _with_noise_metadata(trace, noise)
