import pytest

# (number, title, passed, detail) tuples appended by the acceptance suite
ACCEPTANCE = []


@pytest.fixture
def acceptance():
    def record(number, title, passed, detail=""):
        ACCEPTANCE.append((number, title, bool(passed), detail))
        assert passed, f"criterion {number} ({title}) failed: {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(
            f"[{'PASS' if passed else 'FAIL'}] {number}. {title}: {detail}")
