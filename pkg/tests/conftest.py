import numpy as np
import pytest

from steerneg.gaussian import ChannelParams, SqueezingSpec, TwoModeCovariance, cm_from_squeezing
from steerneg.wigner import SubtractedStateParams

# measured covariance matrices at eta_A = eta_B = 0.9 (lower / higher squeezing)
CM_A9 = TwoModeCovariance.symmetric(1.056, 1.056, -0.287)
CM_A10 = TwoModeCovariance(1.1285, 1.1275, -0.421, 0.420)

LOW_SQ = SqueezingSpec(0.74, 1.38)
HIGH_SQ = SqueezingSpec(0.67, 1.61)

ACCEPTANCE_LINES = []


def random_symmetric_cms(seed, count):
    """Physical EPR-family CMs from random squeezing and channel losses."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        vp = rng.uniform(0.15, 1.0)
        vm = rng.uniform(1.0, 1.8) / vp
        ea, eb = rng.uniform(0.05, 1.0, size=2)
        out.append(cm_from_squeezing(SqueezingSpec(vp, vm), ChannelParams(ea, eb)))
    return out


def heralded(cm, xi=1.0):
    return SubtractedStateParams.from_cm(cm, xi)


@pytest.fixture(scope="session")
def ensemble():
    """1000 random physical symmetric-family CMs, each paired with xi in [0.9, 1]."""
    cms = random_symmetric_cms(20240611, 1000)
    xis = np.random.default_rng(7).uniform(0.9, 1.0, size=len(cms))
    return list(zip(cms, xis))


def record_acceptance(number, title, passed, detail=""):
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {number:>2}. {title}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
