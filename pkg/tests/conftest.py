import pytest

from semidiscrete import power_model


@pytest.fixture
def stable_model():
    return power_model(2.0)


@pytest.fixture
def unstable_model():
    return power_model(1.0)


@pytest.fixture
def ode_model():
    return power_model(0.0)


_ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(label, passed, detail)``."""

    def report(label, passed, detail=""):
        _ACCEPTANCE.append((label, bool(passed), detail))
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}")
