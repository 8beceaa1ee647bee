import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def complex_normal(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_hpd(rng, m, cond=None):
    """Random HPD matrix; with ``cond`` the spectrum spans exactly that ratio."""
    Q, _ = np.linalg.qr(complex_normal(rng, (m, m)))
    if cond is None:
        w = rng.uniform(0.2, 5.0, m)
    else:
        w = np.geomspace(1.0, cond, m)
    return (Q * w) @ Q.conj().T


def random_snapshot(rng, m):
    return complex_normal(rng, m)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def record_acceptance(label, passed, detail):
    line = f"ACCEPTANCE {label}: {'PASS' if passed else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES.append(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
