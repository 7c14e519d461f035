import numpy as np
import pytest

from subcube_juntas.distributions import ExplicitDist


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


@pytest.fixture
def parity2():
    """Parity-tilted pmf on n=2 with eps=1/8: 3/8 on x1 = x2, 1/8 elsewhere."""
    return ExplicitDist(2, [3 / 8, 1 / 8, 1 / 8, 3 / 8])


def random_explicit(rng, n, alpha=1.0):
    return ExplicitDist(n, rng.dirichlet(np.full(1 << n, alpha)))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
