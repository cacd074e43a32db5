import pytest

ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE.append


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
