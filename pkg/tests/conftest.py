import pytest

from bcheck.oracle import EnumConfig, context_pool, enumerate_behaviours


@pytest.fixture(scope="session")
def pool():
    return context_pool()


@pytest.fixture(scope="session")
def corpus4():
    return list(enumerate_behaviours(EnumConfig(4)))


@pytest.fixture(scope="session")
def corpus5():
    return list(enumerate_behaviours(EnumConfig(5)))


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """Record one acceptance line; all lines are repeated in the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def emit(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)

    return emit


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
