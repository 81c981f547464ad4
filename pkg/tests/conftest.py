import pytest

# filled by tests/test_acceptance.py: criterion number -> (status, label, detail)
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, label, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{status}] {n}. {label}: {detail}")


@pytest.fixture
def acceptance():
    return ACCEPTANCE
