import numpy as np
import pytest

from tbands.capacitance import ResonatorChain, to_ktoeplitz
from tbands.ktoeplitz import make_spec

_ACCEPTANCE = {}


def record_acceptance(number: int, title: str, ok: bool, detail: str) -> None:
    _ACCEPTANCE[number] = (title, ok, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title}: {detail}")


def random_spec(rng: np.random.Generator, kmax: int = 4, bound: float = 3.0, min_coupling: float = 0.05):
    """Random k-Toeplitz spec with entries in [-bound, bound] and b_i c_i > 0."""
    k = int(rng.integers(1, kmax + 1))
    a = rng.uniform(-bound, bound, k)
    mag_b = rng.uniform(min_coupling, bound, k)
    mag_c = rng.uniform(min_coupling, bound, k)
    sgn = rng.choice([-1.0, 1.0], k)
    return make_spec(a, sgn * mag_b, sgn * mag_c)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def m1_chain():
    return ResonatorChain((0.5,), (0.5,), 1.0)


@pytest.fixture(scope="session")
def m1(m1_chain):
    return to_ktoeplitz(m1_chain)


@pytest.fixture(scope="session")
def d1_chain():
    return ResonatorChain((0.25, 0.25), (1.0, 2.0), 3.0)


@pytest.fixture(scope="session")
def d1(d1_chain):
    return to_ktoeplitz(d1_chain)
