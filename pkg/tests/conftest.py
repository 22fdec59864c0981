"""Independent brute-force oracles shared by the test modules.

Everything here is built from explicit Kronecker products in the full
``2**N`` space and never touches the package's bitmask machinery.
"""

import numpy as np
import pytest

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
ID = np.eye(2, dtype=complex)


def site_op(op, site, n):
    """``op`` on 1-based ``site`` of ``n`` spins.

    The full-space index of a configuration is its integer encoding with site
    1 in the least significant bit, so site 1 is the *last* Kronecker factor.
    A set bit is spin up, i.e. the first basis state |up> = (0, 1) here, so the
    Pauli matrices are conjugated by sigma_x to put |up> at index 1.
    """
    flip = SX @ op @ SX
    out = np.eye(1, dtype=complex)
    for s in range(n, 0, -1):
        out = np.kron(out, flip if s == site else ID)
    return out


def bond(a, b, n):
    return sum(site_op(P, a, n) @ site_op(P, b, n) for P in (SX, SY, SZ))


def dense_hamiltonian(bonds, n):
    H = np.zeros((2**n, 2**n), dtype=complex)
    for a, b, J in bonds:
        H += J * bond(a, b, n)
    return H


def chain_bonds_oracle(n, jp, j2, j1=1.0):
    """Bonds written straight from the chain Hamiltonian with N sites."""
    out = [(1, 2, jp * j1), (1, 3, jp * j2)] if n >= 3 else [(1, 2, jp * j1)]
    out += [(i, i + 1, j1) for i in range(2, n)]
    out += [(i, i + 2, j2) for i in range(2, n - 1)]
    return out


def composite_bonds_oracle(nl, jpl, nr, jpr, j2, jm):
    n = nl + nr
    g = lambda j: n + 1 - j  # noqa: E731  right chain local -> global
    out = chain_bonds_oracle(nl, jpl, j2)
    out += [(g(a), g(b), J) for a, b, J in chain_bonds_oracle(nr, jpr, j2)]
    out += [(nl, nl + 1, jm), (nl - 1, nl + 1, jm * j2), (nl, nl + 2, jm * j2)]
    return [(a, b, J) for a, b, J in out if J != 0 and 1 <= a <= n and 1 <= b <= n]


def total_s2_dense(n):
    S = [sum(site_op(P, i, n) for i in range(1, n + 1)) / 2 for P in (SX, SY, SZ)]
    return sum(s @ s for s in S)


def sector_indices(n, n_up):
    return np.array([c for c in range(2**n) if bin(c).count("1") == n_up])


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number][1])
