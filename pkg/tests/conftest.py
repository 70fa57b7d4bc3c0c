import pytest

_RESULTS: dict = {}


def pytest_addoption(parser):
    parser.addoption(
        "--large",
        action="store_true",
        default=False,
        help="also run the 241-tree, 36-leaf fixture",
    )


@pytest.fixture
def large(request):
    return request.config.getoption("--large")


@pytest.fixture
def criterion():
    """Record one acceptance verdict; printed again in the terminal summary."""

    def record(name: str, ok: bool, detail: str = "", table: str = "") -> bool:
        line = f"{name} {'PASS' if ok else 'FAIL'}: {detail}"
        _RESULTS[name] = line + ("\n" + table.rstrip() if table else "")
        print(_RESULTS[name])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_RESULTS, key=lambda k: (len(k), k)):
        for line in _RESULTS[name].splitlines():
            terminalreporter.write_line(line)
