import pytest

_CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_CRITERIA] = {}


@pytest.fixture
def criterion(request):
    """record(num, passed, detail) stores one acceptance line and asserts it."""
    store = request.config.stash[_CRITERIA]

    def record(num, title, passed, detail):
        store[num] = (title, bool(passed), detail)
        assert passed, f"criterion {num} ({title}): {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_CRITERIA, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(store):
        title, passed, detail = store[num]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {num:>2}. {title}: {detail}")
