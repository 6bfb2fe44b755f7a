import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# Filled in by test_acceptance.py: criterion number -> (status, detail).
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {detail}")
