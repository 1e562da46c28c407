import numpy as np
import pytest

from strongobs.scenarios import analyze, make_scenario
from strongobs.observer import synthesize


@pytest.fixture(scope="session")
def lorenz_design():
    """Benchmark scenario with its auxiliary pair, verdict and observer."""
    scn = make_scenario(builtin="lorenz96")
    aux, verdict = analyze(scn)
    obs = synthesize(scn.system, aux, verdict.solution)
    return scn, aux, verdict, obs


@pytest.fixture(scope="session")
def lti_design():
    scn = make_scenario(builtin="lti-2state")
    aux, verdict = analyze(scn)
    obs = synthesize(scn.system, aux, verdict.solution)
    return scn, aux, verdict, obs


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = []


class AcceptanceLog:
    """Prints one PASS/FAIL line per acceptance check and asserts it."""

    def check(self, label, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, line


@pytest.fixture
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
