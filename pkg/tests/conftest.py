import numpy as np
import pytest

from regsyn import plant as pl
from regsyn import simulate as sim
from regsyn import synthesis as syn


@pytest.fixture(scope="session")
def example():
    return pl.example_plant()


@pytest.fixture(scope="session")
def design(example):
    """SISO controller and report for the example plant."""
    return syn.synthesize_delay(example)


@pytest.fixture(scope="session")
def modal(example):
    gammas = pl.unstable_spectrum(example)
    return pl.modal_data(example, gammas, example.tau, example.weight)


@pytest.fixture(scope="session")
def traces(example, design):
    """Closed-loop runs over 100 samples for v in {-1, 0, 1}."""
    ctrl, _ = design
    return {v: sim.run_closed_loop(example, ctrl, sim.SimConfig(tau=2.0, v=v)) for v in (-1, 0, 1)}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_VERDICTS = pytest.StashKey()


def pytest_configure(config):
    config.stash[_VERDICTS] = []


@pytest.fixture
def verdict(request):
    """Record one acceptance line ``criterion N: PASS|FAIL  detail``."""
    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        request.config.stash[_VERDICTS].append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
