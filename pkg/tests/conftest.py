import pytest

_RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS] = []


@pytest.fixture
def acceptance(request):
    """Record one acceptance line: acceptance(number, title, passed, seconds, detail)."""
    lines = request.config.stash[_RESULTS]

    def record(number, title, passed, seconds, detail=""):
        lines.append((number, f"[{'PASS' if passed else 'FAIL'}] {number:>2}. {title} ({seconds:.3f} s) {detail}"))
        print(lines[-1][1])

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_RESULTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
