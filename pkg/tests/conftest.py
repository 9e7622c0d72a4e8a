import numpy as np
import pytest

from approxsense.arith import load_library


@pytest.fixture(scope="session")
def library():
    return load_library()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = {}


@pytest.fixture(scope="session")
def criterion():
    """``criterion(n, ok, detail, notes)`` records one acceptance line (plus
    optional recorded magnitudes shown under it), then asserts."""
    def check(n, ok, detail, notes=()):
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA[n] = [line] + [f"    {t}" for t in notes]
        print("\n".join(_CRITERIA[n]))
        assert ok, line
    return check


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            for line in _CRITERIA[n]:
                terminalreporter.write_line(line)
