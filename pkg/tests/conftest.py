import numpy as np
import pytest

from qit import linalg as la

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance_line():
    """Collects one summary line per acceptance criterion for the terminal report."""
    return ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)


def random_pair(d, rng, rank=None):
    return la.random_density(d, rank=rank, rng=rng), la.random_density(d, rng=rng)


def random_channel(d_in, d_out, rng, env=2):
    return la.sample("cptp", (d_in, d_out), seed=int(rng.integers(2**31)), env=env)
