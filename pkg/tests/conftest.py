import math

import pytest

from ststunnel import Barrier, PhysicalParams


@pytest.fixture
def unit():
    return PhysicalParams(1.0, 1.0)


@pytest.fixture
def tall_barrier():
    return Barrier(100.0, 1.0)


STRENGTHS = (math.pi / 10, 3 * math.pi, 30 * math.pi)
K_RATIOS = tuple(round(0.1 * j, 1) for j in range(1, 10))


_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance_lines():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
