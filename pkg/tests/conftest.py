from __future__ import annotations

import pytest

from decoyforge.sources import SourceTriple, make_hsps, make_poisson, make_thermal

INTENSITIES = (0.1, 0.2, 0.5)


@pytest.fixture
def poisson_triple() -> SourceTriple:
    return SourceTriple(*(make_poisson(mu, 20) for mu in INTENSITIES))


@pytest.fixture
def poisson_triple_6() -> SourceTriple:
    return SourceTriple(*(make_poisson(mu, 6) for mu in INTENSITIES))


@pytest.fixture
def thermal_triple() -> SourceTriple:
    return SourceTriple(*(make_thermal(mu, 20) for mu in INTENSITIES))


@pytest.fixture
def hsps_triple() -> SourceTriple:
    return SourceTriple(*(make_hsps(mu, 0.75, 1e-6, 20) for mu in INTENSITIES))


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
