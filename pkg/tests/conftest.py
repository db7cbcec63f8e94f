import numpy as np
import pytest

_criteria = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_criteria] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def record_criterion(request):
    """Log one PASS/FAIL line per acceptance criterion, echoed in the summary."""
    lines = request.config.stash[_criteria]

    def record(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_criteria, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
