import math
import sys

import pytest

from qdcsim.messenger import JonesVector, RandomStream


@pytest.fixture
def stream():
    return RandomStream(20240607)


def jones(h, v):
    return JonesVector(complex(h), complex(v))


S2 = 1 / math.sqrt(2)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(acceptance, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
