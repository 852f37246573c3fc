import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import acceptance_log  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        acceptance_log.OUTCOMES[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not acceptance_log.OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(acceptance_log.OUTCOMES, key=lambda n: int(n.split("_")[1][1:])):
        detail = acceptance_log.DETAILS.get(name, "")
        terminalreporter.write_line(f"{acceptance_log.OUTCOMES[name]}  {name}  {detail}")
