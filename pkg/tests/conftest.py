import math

import pytest

from homodyne_lab.detector_model import ClearanceCurve, DetectorSpec, LossBudget
from homodyne_lab.gaussian_core import QuadratureVariances, variance_from_db

# -3.07 dB squeezed, pure: the state at the crystal
V_MIN_CRYSTAL = variance_from_db(-3.07)


@pytest.fixture
def crystal_state():
    return QuadratureVariances(V_MIN_CRYSTAL, 1.0 / V_MIN_CRYSTAL)


@pytest.fixture
def ideal_detector():
    """Receiver with negligible electronic noise at every frequency."""
    flat = ClearanceCurve(((1e3, 300.0), (1e11, 300.0)))
    return DetectorSpec(responsivity=1.1, nep=2e-12, cmrr=35.0, bandwidth_3db=750e6, clearance=flat)


@pytest.fixture
def budget_051():
    return LossBudget(1.0, 0.51, 1.0)


_ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record one acceptance verdict; printed in the terminal summary."""

    def record(number: int, ok: bool, detail: str):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE):
        terminalreporter.write_line(line)
