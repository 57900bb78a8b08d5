import sys

import pytest

SEED = 2026


@pytest.fixture
def seed():
    return SEED


def pytest_terminal_summary(terminalreporter):
    # repeat the acceptance lines, which pytest captures during the run
    for name, mod in list(sys.modules.items()):
        results = getattr(mod, "RESULTS", None)
        if name.endswith("test_acceptance") and results:
            terminalreporter.section("acceptance criteria")
            for key in sorted(results):
                terminalreporter.write_line(results[key])
