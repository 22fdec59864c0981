"""Chain specifications, magnetization-sector bases and sparse Hamiltonians.

Conventions used throughout the package:

* Pauli normalization: every bond ``sigma_i . sigma_j`` has diagonal elements
  +1 (aligned) / -1 (anti-aligned) and off-diagonal spin-flip elements 2.
* Site ``s`` (1-based) is stored in bit ``s - 1`` of a configuration integer;
  a set bit is an up spin.
* In a composite system the left chain occupies global sites ``1..N_L`` with
  its impurity at site 1, and the right chain occupies ``N_L+1..N`` with its
  impurity at site ``N``.  Right-chain local site ``j`` is global ``N + 1 - j``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

#: J2/J1 separating the gapless Kondo regime from the gapped dimer regime.
J2_CRITICAL = 0.2412

#: Impurity couplings J'_k that tune the Kondo cloud to xi_k = N_k - 1.
IMPURITY_COUPLINGS: dict[int, float] = {
    4: 0.300, 6: 0.280, 8: 0.260, 10: 0.250, 12: 0.240,
    14: 0.230, 16: 0.220, 18: 0.215, 20: 0.210,
    22: 0.205, 24: 0.202, 26: 0.198, 28: 0.195, 30: 0.190,
    32: 0.187, 34: 0.184, 36: 0.180, 38: 0.175,
}

_MAX_SITES = 30


def impurity_coupling_for(n_sites: int) -> float:
    """Tabulated impurity coupling for a chain of ``n_sites`` spins.

    Raises:
        KeyError: if the length is not tabulated (no interpolation is done).
    """
    try:
        return IMPURITY_COUPLINGS[n_sites]
    except KeyError:
        raise KeyError(
            f"no tabulated impurity coupling for a chain of {n_sites} sites; "
            f"available lengths: {sorted(IMPURITY_COUPLINGS)}"
        ) from None


@dataclass(frozen=True)
class ChainSpec:
    """One Kondo chain: impurity at site 1 coupled with strength ``j_prime``."""

    n_sites: int
    j_prime: float
    j2: float = 0.0
    j1: float = 1.0

    def __post_init__(self):
        if not isinstance(self.n_sites, (int, np.integer)) or isinstance(self.n_sites, bool):
            raise ValueError(f"n_sites must be an integer, got {self.n_sites!r}")
        if self.n_sites < 2 or self.n_sites % 2:
            raise ValueError(f"n_sites must be even and >= 2, got {self.n_sites}")
        if not self.j_prime > 0:
            raise ValueError(f"j_prime must be positive, got {self.j_prime}")
        if not self.j2 >= 0:
            raise ValueError(f"j2 must be non-negative, got {self.j2}")
        if not self.j1 > 0:
            raise ValueError(f"j1 must be positive, got {self.j1}")

    @classmethod
    def from_table(cls, n_sites: int, j2: float = 0.0) -> "ChainSpec":
        return cls(n_sites, impurity_coupling_for(n_sites), j2)

    @property
    def regime(self) -> str:
        if self.j2 < J2_CRITICAL:
            return "kondo"
        if self.j2 > J2_CRITICAL:
            return "dimer"
        return "critical"

    def bonds(self) -> list[tuple[int, int, float]]:
        """Exchange bonds ``(site_a, site_b, coupling)`` with 1-based local sites.

        Bulk sums are truncated so that the chain has exactly ``n_sites`` spins.
        Zero couplings are dropped.
        """
        n, j1, j2, jp = self.n_sites, self.j1, self.j2, self.j_prime
        out = [(1, 2, jp * j1)]
        if n >= 3:
            out.append((1, 3, jp * j2))
        out += [(i, i + 1, j1) for i in range(2, n)]
        out += [(i, i + 2, j2) for i in range(2, n - 1)]
        return [b for b in out if b[2] != 0.0]


@dataclass(frozen=True)
class CompositeSpec:
    left: ChainSpec
    right: ChainSpec
    j_m: float

    def __post_init__(self):
        if not self.j_m >= 0:
            raise ValueError(f"j_m must be non-negative, got {self.j_m}")

    @property
    def n_sites(self) -> int:
        return self.left.n_sites + self.right.n_sites

    def mirrored(self) -> "CompositeSpec":
        return CompositeSpec(self.right, self.left, self.j_m)

    def right_global_site(self, local: int) -> int:
        return self.n_sites + 1 - local

    def chain_bonds(self) -> list[tuple[int, int, float]]:
        """Bonds of ``H_L + H_R`` in global 1-based site numbering."""
        out = list(self.left.bonds())
        out += [(self.right_global_site(a), self.right_global_site(b), J)
                for a, b, J in self.right.bonds()]
        return out

    def junction_bonds(self, j_m: float = 1.0) -> list[tuple[int, int, float]]:
        """Bonds of the junction term, scaled by ``j_m``.

        The two next-nearest terms take J2 from the chain that contributes the
        inner spin (left for ``sigma^L_{N_L-1}``, right for ``sigma^R_{N_R-1}``).
        """
        nl = self.left.n_sites
        r_edge = self.right_global_site(self.right.n_sites)  # == nl + 1
        out = [(nl, r_edge, j_m * self.left.j1)]
        if nl >= 2:
            out.append((nl - 1, r_edge, j_m * self.left.j2))
        if self.right.n_sites >= 2:
            out.append((nl, self.right_global_site(self.right.n_sites - 1), j_m * self.right.j2))
        return [b for b in out if b[2] != 0.0 and b[0] != b[1]]


class SectorBasis:
    """Ordered spin configurations of ``n_sites`` spins with ``n_up`` up spins.

    ``n_up=None`` denotes the full ``2**n_sites`` space (used when a field
    breaks magnetization conservation).  Bases are value objects: equality and
    hashing depend only on ``(n_sites, n_up)``.
    """

    __slots__ = ("n_sites", "n_up", "configurations")

    def __init__(self, n_sites: int, n_up: int | None, configurations: np.ndarray):
        self.n_sites = n_sites
        self.n_up = n_up
        configurations.setflags(write=False)
        self.configurations = configurations

    @property
    def size(self) -> int:
        return len(self.configurations)

    def __len__(self):
        return self.size

    def __eq__(self, other):
        if not isinstance(other, SectorBasis):
            return NotImplemented
        return (self.n_sites, self.n_up) == (other.n_sites, other.n_up)

    def __hash__(self):
        return hash((SectorBasis, self.n_sites, self.n_up))

    def __repr__(self):
        up = "all" if self.n_up is None else self.n_up
        return f"SectorBasis(n_sites={self.n_sites}, n_up={up}, size={self.size})"

    def index(self, conf):
        """Ordinal(s) of configuration(s); ``KeyError`` if any is absent."""
        conf_arr = np.asarray(conf, dtype=np.int64)
        if self.n_up is None:
            pos = conf_arr
            ok = (pos >= 0) & (pos < self.size)
        else:
            pos = np.searchsorted(self.configurations, conf_arr)
            pos = np.minimum(pos, self.size - 1)
            ok = self.configurations[pos] == conf_arr
        if not np.all(ok):
            bad = conf_arr[~ok] if conf_arr.ndim else conf_arr
            raise KeyError(f"configuration(s) {np.atleast_1d(bad)[:5]} not in {self!r}")
        return int(pos) if np.ndim(pos) == 0 else pos

    def up_counts(self) -> np.ndarray:
        if self.n_up is not None:
            return np.full(self.size, self.n_up, dtype=np.int64)
        return np.bitwise_count(self.configurations).astype(np.int64)


def _check_n_sites(n_sites: int) -> None:
    if not 1 <= n_sites <= _MAX_SITES:
        raise ValueError(f"n_sites must lie in 1..{_MAX_SITES}, got {n_sites}")


@functools.lru_cache(maxsize=32)
def build_sector_basis(n_sites: int, n_up: int) -> SectorBasis:
    """All configurations of ``n_sites`` spins with exactly ``n_up`` up spins."""
    _check_n_sites(n_sites)
    if not 0 <= n_up <= n_sites:
        raise ValueError(f"n_up must lie in 0..{n_sites}, got {n_up}")
    chunk = 1 << 22
    parts = []
    for start in range(0, 1 << n_sites, chunk):
        block = np.arange(start, min(start + chunk, 1 << n_sites), dtype=np.int64)
        parts.append(block[np.bitwise_count(block) == n_up])
    confs = np.concatenate(parts)
    assert len(confs) == math.comb(n_sites, n_up)
    return SectorBasis(n_sites, n_up, confs)


@functools.lru_cache(maxsize=8)
def build_full_basis(n_sites: int) -> SectorBasis:
    _check_n_sites(n_sites)
    return SectorBasis(n_sites, None, np.arange(1 << n_sites, dtype=np.int64))


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """A Hermitian operator stored as CSR over a fixed basis."""

    matrix: sp.csr_matrix
    basis: SectorBasis

    def __post_init__(self):
        if self.matrix.shape != (self.basis.size, self.basis.size):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match basis size {self.basis.size}"
            )

    @property
    def dimension(self) -> int:
        return self.basis.size

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.matrix.data)

    def __matmul__(self, vec: np.ndarray) -> np.ndarray:
        if self.is_real and np.iscomplexobj(vec):
            # avoids an implicit complex copy of the matrix on every product
            return self.matrix @ vec.real + 1j * (self.matrix @ vec.imag)
        return self.matrix @ vec

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        if other.basis != self.basis:
            raise ValueError("operators live on different bases")
        return SparseOperator((self.matrix + other.matrix).tocsr(), self.basis)

    def scaled(self, factor: float) -> "SparseOperator":
        return SparseOperator((self.matrix * factor).tocsr(), self.basis)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def is_symmetric(self) -> bool:
        """Exact (bitwise) Hermitian symmetry of the stored entries."""
        diff = self.matrix - self.matrix.conj().T
        return diff.count_nonzero() == 0

    def entries(self):
        """Yield compressed rows as ``(row, columns, values)``."""
        m = self.matrix
        for i in range(m.shape[0]):
            lo, hi = m.indptr[i], m.indptr[i + 1]
            yield i, m.indices[lo:hi], m.data[lo:hi]


def exchange_operator(basis: SectorBasis, bonds) -> SparseOperator:
    """Sum of Pauli Heisenberg bonds ``J sigma_a . sigma_b`` (1-based sites)."""
    confs = basis.configurations
    dim = basis.size
    diag = np.zeros(dim)
    rows, cols, vals = [], [], []
    for a, b, coupling in bonds:
        if not (1 <= a <= basis.n_sites and 1 <= b <= basis.n_sites) or a == b:
            raise ValueError(f"bond ({a}, {b}) invalid for {basis.n_sites} sites")
        ba = (confs >> (a - 1)) & 1
        bb = (confs >> (b - 1)) & 1
        same = ba == bb
        diag += np.where(same, coupling, -coupling)
        src = np.flatnonzero(~same)
        flip = (1 << (a - 1)) | (1 << (b - 1))
        tgt = basis.index(confs[src] ^ flip)
        rows.append(tgt)
        cols.append(src)
        vals.append(np.full(len(src), 2.0 * coupling))
    nz = np.flatnonzero(diag)
    rows.append(nz)
    cols.append(nz)
    vals.append(diag[nz])
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    ).tocsr()
    mat.sum_duplicates()
    return SparseOperator(mat, basis)


def build_chain_hamiltonian(spec: ChainSpec, basis: SectorBasis) -> SparseOperator:
    if basis.n_sites != spec.n_sites:
        raise ValueError(f"basis has {basis.n_sites} sites, chain has {spec.n_sites}")
    return exchange_operator(basis, spec.bonds())


@functools.lru_cache(maxsize=4)
def _composite_parts(left: ChainSpec, right: ChainSpec, basis: SectorBasis):
    comp = CompositeSpec(left, right, 1.0)
    return (exchange_operator(basis, comp.chain_bonds()),
            exchange_operator(basis, comp.junction_bonds(1.0)))


def build_composite_hamiltonian(comp: CompositeSpec, basis: SectorBasis) -> SparseOperator:
    """``H_L + H_R + H_I`` for the coupled pair over ``basis``."""
    if basis.n_sites != comp.n_sites:
        raise ValueError(f"basis has {basis.n_sites} sites, composite has {comp.n_sites}")
    chains, junction = _composite_parts(comp.left, comp.right, basis)
    if comp.j_m == 0.0:
        return chains
    return SparseOperator((chains.matrix + comp.j_m * junction.matrix).tocsr(), basis)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Unit-norm complex amplitudes over a basis."""

    basis: SectorBasis
    amplitudes: np.ndarray

    NORM_TOL = 1e-10

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.basis.size,):
            raise ValueError(f"expected {self.basis.size} amplitudes, got shape {amps.shape}")
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > self.NORM_TOL:
            raise ValueError(f"state is not normalized (norm {nrm!r})")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, basis: SectorBasis, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=np.complex128)
        nrm = np.linalg.norm(amps)
        if nrm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(basis, amps / nrm)

    @classmethod
    def from_configs(cls, n_sites: int, terms: dict[int, complex], n_up: int | None = None):
        """Build a state from ``{configuration: amplitude}`` and normalize it."""
        basis = build_full_basis(n_sites) if n_up is None else build_sector_basis(n_sites, n_up)
        amps = np.zeros(basis.size, dtype=np.complex128)
        for conf, amp in terms.items():
            amps[basis.index(conf)] += amp
        return cls.normalized(basis, amps)

    @property
    def n_sites(self) -> int:
        return self.basis.n_sites

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "StateVector") -> complex:
        if other.basis != self.basis:
            raise ValueError("states live on different bases")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def label_to_config(label: str) -> int:
    """Ket label like ``"0011"`` (site 1 leftmost) to a configuration integer."""
    return sum(1 << i for i, ch in enumerate(label) if ch == "1")


def config_to_label(conf: int, n_sites: int) -> str:
    return "".join("1" if (conf >> i) & 1 else "0" for i in range(n_sites))


def _place_right(confs: np.ndarray, n_right: int, n_total: int) -> np.ndarray:
    # right-chain local bit j-1 goes to global bit n_total - j
    out = np.zeros_like(confs)
    for j in range(1, n_right + 1):
        out |= ((confs >> (j - 1)) & 1) << (n_total - j)
    return out


def embed_product_state(left: StateVector, right: StateVector,
                        composite_basis: SectorBasis) -> StateVector:
    """Tensor product of chain states mapped into the composite basis."""
    nl, nr = left.n_sites, right.n_sites
    if composite_basis.n_sites != nl + nr:
        raise ValueError(
            f"composite basis has {composite_basis.n_sites} sites, expected {nl + nr}"
        )
    if composite_basis.n_up is not None:
        if left.basis.n_up is None or right.basis.n_up is None:
            raise ValueError("chain states must live in fixed-magnetization sectors")
        if left.basis.n_up + right.basis.n_up != composite_basis.n_up:
            raise ValueError(
                f"sector mismatch: {left.basis.n_up} + {right.basis.n_up} up spins "
                f"!= composite n_up {composite_basis.n_up}"
            )
    lconf = left.basis.configurations
    rconf = _place_right(right.basis.configurations, nr, nl + nr)
    confs = (lconf[:, None] | rconf[None, :]).ravel()
    amps = np.outer(left.amplitudes, right.amplitudes).ravel()
    out = np.zeros(composite_basis.size, dtype=np.complex128)
    out[composite_basis.index(confs)] = amps
    return StateVector(composite_basis, out)


def to_full_space(psi: StateVector) -> StateVector:
    """Re-express a sector state in the full ``2**N`` basis."""
    full = build_full_basis(psi.n_sites)
    amps = np.zeros(full.size, dtype=np.complex128)
    amps[psi.basis.configurations] = psi.amplitudes
    return StateVector(full, amps)


def dump_state(path: str | Path, psi: StateVector) -> None:
    """Write a state as ``.npz`` with ``n_sites``, ``n_up`` (-1 = full space),
    ``configurations`` and ``amplitudes`` as an ``(M, 2)`` float array of
    (real, imag) pairs in basis order."""
    np.savez(
        path,
        n_sites=psi.n_sites,
        n_up=-1 if psi.basis.n_up is None else psi.basis.n_up,
        configurations=psi.basis.configurations,
        amplitudes=np.column_stack([psi.amplitudes.real, psi.amplitudes.imag]),
    )


def load_state(path: str | Path) -> StateVector:
    with np.load(path) as data:
        n_sites = int(data["n_sites"])
        n_up = int(data["n_up"])
        pairs = data["amplitudes"]
        confs = data["configurations"]
    basis = build_full_basis(n_sites) if n_up < 0 else build_sector_basis(n_sites, n_up)
    if not np.array_equal(confs, basis.configurations):
        raise ValueError("stored configurations do not match the canonical basis order")
    return StateVector(basis, pairs[:, 0] + 1j * pairs[:, 1])


def dump_operator(path: str | Path, op: SparseOperator) -> None:
    """Write an operator as ``.npz``: basis header plus CSR arrays."""
    m = op.matrix
    np.savez(
        path,
        n_sites=op.basis.n_sites,
        n_up=-1 if op.basis.n_up is None else op.basis.n_up,
        indptr=m.indptr, indices=m.indices, data=m.data,
    )


def load_operator(path: str | Path) -> SparseOperator:
    with np.load(path) as data:
        n_sites, n_up = int(data["n_sites"]), int(data["n_up"])
        basis = build_full_basis(n_sites) if n_up < 0 else build_sector_basis(n_sites, n_up)
        mat = sp.csr_matrix((data["data"], data["indices"], data["indptr"]),
                            shape=(basis.size, basis.size))
    return SparseOperator(mat, basis)
