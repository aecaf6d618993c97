import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from adaptviv.dataio import reference_pipe  # noqa: E402
from adaptviv.predictor import SNCurve  # noqa: E402


@pytest.fixture
def ndp():
    return reference_pipe("ndp", stress_per_curvature=2.0e9)


@pytest.fixture
def sn():
    return SNCurve(m=3.0, log_a=11.63)


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(RESULTS):
            terminalreporter.write_line(line)
