import pytest

from totalpos.numkernel import PrecisionContext


@pytest.fixture(scope="session")
def ctx():
    return PrecisionContext(120)


@pytest.fixture(scope="session")
def mp(ctx):
    return ctx.mp


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS, _line
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(_line(n, *RESULTS[n]))
