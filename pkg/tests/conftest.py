import pytest

from friedlander.special_fn import zero_table

# criterion number -> (status, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


@pytest.fixture(scope="session")
def zeros100():
    return zero_table(100)


@pytest.fixture(scope="session")
def zeros4096():
    return zero_table(4096)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {status}  {detail}")
