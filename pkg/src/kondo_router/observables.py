"""Two-site reduced density matrices, concurrence and total-spin diagnostics."""

from __future__ import annotations

import functools

import numpy as np

from .model import SectorBasis, StateVector, build_sector_basis

SINGLET = np.array([0, 1, -1, 0], dtype=np.complex128) / np.sqrt(2)
_SYSY = np.fliplr(np.diag([-1.0, 1.0, 1.0, -1.0]))  # sigma_y (x) sigma_y


@functools.lru_cache(maxsize=64)
def _pair_plan(basis: SectorBasis, site_a: int, site_b: int):
    """Index pairs ``(k1, k2, i1, i2)`` with identical configurations outside
    the two sites, so that ``rho[k1, k2] = sum psi[i1] * conj(psi[i2])``."""
    confs = basis.configurations
    ba = (confs >> (site_a - 1)) & 1
    bb = (confs >> (site_b - 1)) & 1
    local = 2 * ba + bb
    rest = confs & ~((1 << (site_a - 1)) | (1 << (site_b - 1)))
    groups = []
    for k in range(4):
        idx = np.flatnonzero(local == k)
        groups.append((rest[idx], idx))  # rest is sorted since confs is
    plan = []
    for k1 in range(4):
        for k2 in range(k1, 4):
            r1, i1 = groups[k1]
            r2, i2 = groups[k2]
            _, p1, p2 = np.intersect1d(r1, r2, assume_unique=True, return_indices=True)
            if len(p1):
                plan.append((k1, k2, i1[p1], i2[p2]))
    return plan


def reduced_density_matrix(psi: StateVector, site_a: int, site_b: int) -> np.ndarray:
    """4x4 density matrix of sites ``site_a < site_b`` (1-based).

    Basis order is ``|00>, |01>, |10>, |11>`` of ``(site_a, site_b)``.
    """
    n = psi.n_sites
    if not (1 <= site_a < site_b <= n):
        raise ValueError(f"need 1 <= site_a < site_b <= {n}, got ({site_a}, {site_b})")
    amps = psi.amplitudes
    rho = np.zeros((4, 4), dtype=np.complex128)
    for k1, k2, i1, i2 in _pair_plan(psi.basis, site_a, site_b):
        val = np.dot(amps[i1], amps[i2].conj())
        rho[k1, k2] = val
        if k1 != k2:
            rho[k2, k1] = np.conj(val)
    return rho


def reduced_density_matrix_of(rho: np.ndarray, basis: SectorBasis, site_a: int,
                              site_b: int) -> np.ndarray:
    """Two-site reduction of a density matrix given over ``basis``."""
    if not (1 <= site_a < site_b <= basis.n_sites):
        raise ValueError(f"need 1 <= site_a < site_b <= {basis.n_sites}")
    out = np.zeros((4, 4), dtype=np.complex128)
    for k1, k2, i1, i2 in _pair_plan(basis, site_a, site_b):
        val = rho[i1, i2].sum()
        out[k1, k2] = val
        if k1 != k2:
            out[k2, k1] = np.conj(val)
    return out


def validate_density_matrix(rho: np.ndarray, tol: float = 1e-8) -> None:
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError(f"density matrix trace is {np.trace(rho).real:.3e}, not 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise ValueError("density matrix has negative eigenvalues")


def concurrence(rho: np.ndarray) -> float:
    """Wootters concurrence of a two-qubit density matrix.

    With ``rho = B B^dag`` the decreasing ``lambda_i`` are the singular values
    of the complex-symmetric ``M = B^T (sigma_y x sigma_y) B``, since
    ``M M^dag`` is similar to ``rho rho_tilde``.  Taking singular values
    directly avoids the square roots of roundoff-level eigenvalues, which
    would otherwise cost about eight digits near pure states.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    validate_density_matrix(rho)
    w, U = np.linalg.eigh((rho + rho.conj().T) / 2)
    B = U * np.sqrt(np.clip(w, 0, None))
    lam = np.linalg.svd(B.T @ _SYSY @ B, compute_uv=False)
    return float(min(1.0, max(0.0, lam[0] - lam[1] - lam[2] - lam[3])))


def singlet_fidelity(rho: np.ndarray) -> float:
    rho = np.asarray(rho, dtype=np.complex128)
    val = np.vdot(SINGLET, rho @ SINGLET).real
    return float(min(1.0, max(0.0, val)))


def total_spin_squared(psi: StateVector) -> float:
    """``<S^2>`` in spin-1/2 units via ``S^2 = S^- S^+ + S_z^2 + S_z``."""
    basis = psi.basis
    n = basis.n_sites
    confs = basis.configurations
    amps = psi.amplitudes
    sz = basis.up_counts() - n / 2
    if basis.n_up is None:
        target_basis = basis
    elif basis.n_up == n:
        target_basis = None
    else:
        target_basis = build_sector_basis(n, basis.n_up + 1)
    raised_norm = 0.0
    if target_basis is not None:
        raised = np.zeros(target_basis.size, dtype=np.complex128)
        for i in range(n):
            down = ((confs >> i) & 1) == 0
            tgt = target_basis.index(confs[down] | (1 << i))
            np.add.at(raised, tgt, amps[down])
        raised_norm = float(np.vdot(raised, raised).real)
    probs = np.abs(amps) ** 2
    return raised_norm + float(np.dot(probs, sz**2 + sz))
