import numpy as np
import pytest

_ACCEPTANCE = []


@pytest.fixture
def acceptance_log():
    """Record one PASS/FAIL line per acceptance criterion (printed in the terminal summary)."""
    def log(name, passed, detail=""):
        _ACCEPTANCE.append((name, bool(passed), detail))
        return passed
    return log


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
