"""Shared test plumbing.

test_acceptance.py records one line per criterion through record(); the
terminal-summary hook reprints the collected lines after the test tail so
they survive output capture (pytest -v 2>&1 | tee ...) in one block.
"""

ACCEPTANCE_RESULTS = []


def record(index, ok, detail):
    word = "PASS" if ok else "FAIL"
    ACCEPTANCE_RESULTS.append((index, "criterion %2d: %s  %s" % (index, word, detail)))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(line)
