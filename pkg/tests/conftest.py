import pytest

ACCEPTANCE = {}


def pytest_addoption(parser):
    parser.addoption("--slow", action="store_true", default=False, help="run long-running checks")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running checks, enabled with --slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--slow"):
        return
    skip = pytest.mark.skip(reason="needs --slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def record_acceptance():
    """Register an acceptance verdict; printed in the terminal summary."""

    def record(number, passed, detail):
        ACCEPTANCE[number] = (bool(passed), detail)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE and not any("test_acceptance" in str(a) for a in config.args):
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in range(1, 15):
        if n in ACCEPTANCE:
            ok, detail = ACCEPTANCE[n]
            tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        else:
            tr.write_line(f"criterion {n:2d}: NOT RUN")
