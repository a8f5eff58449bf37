import numpy as np
import pytest
from scipy.linalg import expm

from wehrl_witness.fock import SingleModeState
from wehrl_witness.gaussian import OMEGA, CovarianceSpec


def random_ket(rng, levels, dim):
    """Random pure single-mode ket on the first ``levels`` Fock states of ``dim``."""
    psi = np.zeros(dim, dtype=complex)
    psi[:levels] = rng.normal(size=levels) + 1j * rng.normal(size=levels)
    return psi / np.linalg.norm(psi)


def random_mixed(rng, dim):
    """Random full-rank single-mode density matrix with a random eigenbasis."""
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    u, _ = np.linalg.qr(a)
    p = rng.dirichlet(np.ones(dim))
    return SingleModeState((u * p) @ u.conj().T)


def random_covariance(rng, max_squeeze=0.6):
    """Valid two-mode Wigner covariance: random symplectic on a thermal state."""
    h = rng.normal(size=(4, 4)) * max_squeeze
    S = expm(OMEGA @ (h + h.T) / 2)
    nu = 0.5 + rng.uniform(0, 1, size=2)
    return CovarianceSpec(S @ np.diag([nu[0], nu[0], nu[1], nu[1]]) @ S.T)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE = []


@pytest.fixture
def acceptance_log():
    """Record one pass/fail line per acceptance criterion."""
    def log(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok
    return log


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
