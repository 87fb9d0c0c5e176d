import sys

import pytest

from fourlevel.model import lambda_config, n_config


@pytest.fixture
def fig3():
    """Lambda scheme at the frequencies of the lambda phase diagram."""
    return lambda mu13=0.0, mu23=0.0, mu34=0.0, **kw: lambda_config(mu13, mu23, mu34, **kw)


@pytest.fixture
def fig5():
    """N scheme at the frequencies of the N phase diagram."""
    return lambda mu13=0.0, mu23=0.0, mu24=0.0, **kw: n_config(mu13, mu23, mu24, **kw)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance PASS/FAIL lines after the run."""
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
