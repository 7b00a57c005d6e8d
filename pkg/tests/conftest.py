import pytest

acceptance_key = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(number, title, passed, detail)``."""
    lines = request.config.stash.setdefault(acceptance_key, [])

    def record(number, title, passed, detail=""):
        lines.append((number, title, passed, detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(acceptance_key, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(lines):
        extra = f" ({detail})" if detail else ""
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {number}. {title}{extra}")
