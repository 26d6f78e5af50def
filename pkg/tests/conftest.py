
# (index, title, passed, detail) lines filled in by the acceptance tests
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance summary")
    for idx, title, passed, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"[{idx:2d}] {'PASS' if passed else 'FAIL'}  {title}: {detail}")
