"""Lanczos ground states and Krylov time propagation.

The dense eigendecomposition path (:func:`evolve_dense_oracle`) is the
brute-force reference the Krylov propagator is checked against.
"""

from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceError, PropagationError
from .model import SparseOperator, StateVector

DENSE_DIMENSION_LIMIT = 20000
LANCZOS_SEED = 20100607

_BREAKDOWN = 1e-14


class NearDegeneracyWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SolverConfig:
    lanczos_tol: float = 1e-10
    lanczos_max_iter: int = 500
    krylov_dim: int = 30
    step_tol: float = 1e-9
    dt: float = 0.05
    lanczos_seed: int = LANCZOS_SEED
    min_substep: float = 1e-9

    def __post_init__(self):
        for name in ("lanczos_tol", "lanczos_max_iter", "krylov_dim", "step_tol", "dt",
                     "min_substep"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.krylov_dim < 3:
            raise ValueError(f"krylov_dim must be >= 3, got {self.krylov_dim}")


@dataclass(frozen=True)
class LanczosResult:
    energy: float
    state: StateVector
    residual: float
    iterations: int
    gap: float  # distance to the next Ritz value; nan if unavailable


def _lowest_ritz(alpha, beta):
    if len(alpha) == 1:
        return np.array(alpha), np.ones((1, 1))
    return eigh_tridiagonal(np.asarray(alpha), np.asarray(beta))


def lanczos_ground_state(H: SparseOperator, cfg: SolverConfig = SolverConfig(),
                         start: np.ndarray | None = None) -> LanczosResult:
    """Restarted Lanczos with full reorthogonalization.

    Each restart cycle builds at most ``max(cfg.krylov_dim, 120)`` vectors and
    restarts from the current lowest Ritz vector.
    """
    dim = H.dimension
    if dim < 1:
        raise ValueError("operator has zero dimension")
    dtype = np.float64 if H.is_real else np.complex128
    if start is None:
        start = np.random.default_rng(cfg.lanczos_seed).standard_normal(dim)
    v = np.asarray(start, dtype=dtype)
    v = v / np.linalg.norm(v)
    cycle = min(dim, max(cfg.krylov_dim, 120))
    total = 0
    residual = np.inf
    gap = np.nan
    while True:
        V = np.zeros((cycle, dim), dtype=dtype)
        V[0] = v
        alpha, beta = [], []
        for j in range(cycle):
            w = H @ V[j]
            a = np.vdot(V[j], w).real
            alpha.append(a)
            w = w - a * V[j]
            if j > 0:
                w -= beta[j - 1] * V[j - 1]
            for _ in range(2):
                w -= V[: j + 1].T @ (V[: j + 1].conj() @ w)
            b = np.linalg.norm(w)
            total += 1
            theta, S = _lowest_ritz(alpha, beta)
            residual = b * abs(S[-1, 0])
            if residual < cfg.lanczos_tol or b < _BREAKDOWN or j + 1 == cycle \
                    or total >= cfg.lanczos_max_iter:
                break
            beta.append(b)
            V[j + 1] = w / b
        k = len(alpha)
        x = S[:, 0] @ V[:k]
        x /= np.linalg.norm(x)
        energy = float(theta[0])
        gap = float(theta[1] - theta[0]) if k > 1 else np.nan
        true_res = float(np.linalg.norm(H @ x - energy * x))
        if true_res < cfg.lanczos_tol:
            return LanczosResult(energy, StateVector(H.basis, x), true_res, total, gap)
        if total >= cfg.lanczos_max_iter:
            raise ConvergenceError(
                f"Lanczos did not converge in {total} iterations", true_res
            )
        v = x


def ground_state(H: SparseOperator, cfg: SolverConfig = SolverConfig()) -> tuple[float, StateVector]:
    """Lowest eigenpair of ``H`` within its sector.

    Warns with :class:`NearDegeneracyWarning` when the next Ritz value lies
    within 1e-8; any lowest eigenvector is returned in that case.
    """
    res = lanczos_ground_state(H, cfg)
    if res.gap < 1e-8:
        warnings.warn(
            f"near-degenerate ground state (gap {res.gap:.2e})", NearDegeneracyWarning,
            stacklevel=2,
        )
    return res.energy, res.state


def _krylov_step(H: SparseOperator, v: np.ndarray, tau: float, cfg: SolverConfig):
    """One adaptive Krylov step from ``v``; returns ``(new_vector, tau_taken)``."""
    dim = v.shape[0]
    m = min(cfg.krylov_dim, dim)
    V = np.zeros((m, dim), dtype=np.complex128)
    V[0] = v
    alpha, beta = [], []
    breakdown = False
    for j in range(m):
        w = H @ V[j]
        a = np.vdot(V[j], w).real
        alpha.append(a)
        w = w - a * V[j]
        if j > 0:
            w -= beta[j - 1] * V[j - 1]
        w -= V[: j + 1].T @ (V[: j + 1].conj() @ w)
        b = np.linalg.norm(w)
        if b < _BREAKDOWN:
            breakdown = True
            break
        # a posteriori error of the order-(j+1) approximation at the full step
        if j >= 1 or m == 1:
            theta, S = _lowest_ritz(alpha, beta)
            c = S @ (np.exp(-1j * theta * tau) * S[0])
            if b * abs(c[-1]) <= cfg.step_tol:
                return c @ V[: j + 1], tau
        if j + 1 == m:
            break
        beta.append(b)
        V[j + 1] = w / b
    k = len(alpha)
    theta, S = _lowest_ritz(alpha, beta[: k - 1])
    while True:
        c = S @ (np.exp(-1j * theta * tau) * S[0])
        err = 0.0 if breakdown else b * abs(c[-1])
        if err <= cfg.step_tol:
            return c @ V[:k], tau
        tau /= 2
        if tau < cfg.min_substep:
            raise PropagationError(
                f"Krylov step cannot reach tolerance {cfg.step_tol:g} "
                f"(error {err:.2e} at substep {2 * tau:.2e})"
            )


def propagate(H: SparseOperator, psi: StateVector, dt: float,
              cfg: SolverConfig = SolverConfig()) -> tuple[StateVector, float]:
    """Krylov step returning the renormalized state and its norm before
    the final renormalization (a drift diagnostic)."""
    if psi.basis != H.basis:
        raise ValueError("state and operator live on different bases")
    if dt < 0:
        raise ValueError(f"dt must be non-negative, got {dt}")
    v = psi.amplitudes
    raw = 1.0
    remaining = float(dt)
    while remaining > 0:
        v, tau = _krylov_step(H, v, remaining, cfg)
        raw = float(np.linalg.norm(v))
        v = v / raw
        remaining = remaining - tau if tau < remaining else 0.0
    return StateVector(psi.basis, v), raw


def evolve_krylov(H: SparseOperator, psi: StateVector, dt: float,
                  cfg: SolverConfig = SolverConfig()) -> StateVector:
    """Approximate ``exp(-i H dt) psi`` with adaptive Krylov substeps."""
    return propagate(H, psi, dt, cfg)[0]


@functools.lru_cache(maxsize=4)
def _dense_eigensystem(H: SparseOperator):
    return np.linalg.eigh(H.toarray())


def evolve_dense_oracle(H: SparseOperator, psi: StateVector, t: float) -> StateVector:
    """Exact ``exp(-i H t) psi`` from a full eigendecomposition."""
    if H.dimension > DENSE_DIMENSION_LIMIT:
        raise ValueError(
            f"dimension {H.dimension} exceeds the dense limit {DENSE_DIMENSION_LIMIT}"
        )
    if psi.basis != H.basis:
        raise ValueError("state and operator live on different bases")
    w, U = _dense_eigensystem(H)
    coeff = U.conj().T @ psi.amplitudes
    out = U @ (np.exp(-1j * w * t) * coeff)
    return StateVector.normalized(psi.basis, out)


def expectation(H: SparseOperator, psi: StateVector) -> float:
    if psi.basis != H.basis:
        raise ValueError("state and operator live on different bases")
    return float(np.vdot(psi.amplitudes, H @ psi.amplitudes).real)
