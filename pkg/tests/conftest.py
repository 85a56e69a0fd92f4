import numpy as np
import pytest

from sosg import optionlab

_ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def record():
    """record(number, name, passed, detail) -> passed; collected for the end-of-run summary."""

    def _record(number: int, name: str, passed: bool, detail: str = "") -> bool:
        _ACCEPTANCE[number] = (name, bool(passed), detail)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        name, ok, detail = _ACCEPTANCE[k]
        line = f"[{'PASS' if ok else 'FAIL'}] {k:2d}. {name}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def table1():
    return optionlab.bundled_table1()


@pytest.fixture(scope="session")
def table1_curves(table1):
    """BADG curve, its wall time and the grid-LP reference at 8001 points on the default setup."""
    import time

    cfg = optionlab.CurveConfig()
    t0 = time.perf_counter()
    curve = optionlab.probability_curve(table1, cfg)
    elapsed = time.perf_counter() - t0
    ref = optionlab.oracle_curve(table1, cfg, grid_n=8001)
    return curve, elapsed, ref
