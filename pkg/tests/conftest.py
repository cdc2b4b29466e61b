import pytest

ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}


@pytest.fixture
def accept(request):
    """Record one acceptance line: ``accept(n, ok, detail)``; the test still asserts."""
    def record(n: int, ok: bool, detail: str) -> bool:
        request.config.stash[ACCEPTANCE][n] = (bool(ok), detail)
        return ok
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(ACCEPTANCE, {})
    if not results:
        return
    terminalreporter.section("acceptance")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"ACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} {detail}")
