import pytest

# criterion number -> (title, passed, note); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        title, ok, note = ACCEPTANCE[num]
        line = f"criterion {num:>2} {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  [{note}]" if note else ""))


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE
