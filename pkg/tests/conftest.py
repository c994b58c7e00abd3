import math

import pytest

from rotohom import OpticalConfig, SagnacArm, tune_birefringence


@pytest.fixture
def optics():
    return OpticalConfig()


@pytest.fixture
def arm():
    return SagnacArm()


@pytest.fixture
def peak_arm(arm, optics):
    """Loop tuned so the oscillating features are full peaks at rest."""
    return tune_birefringence(arm, optics, 0.0)


@pytest.fixture
def dip_arm(arm, optics):
    """Loop tuned so the oscillating features are full dips at rest."""
    return tune_birefringence(arm, optics, math.pi)


VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[VERDICTS] = []


@pytest.fixture
def verdict(request):
    """Record and print a PASS/FAIL line for an acceptance criterion, then assert it."""
    def record(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {label}" + (f"  [{detail}]" if detail else "")
        request.config.stash[VERDICTS].append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
