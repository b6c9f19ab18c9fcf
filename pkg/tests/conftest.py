"""Collects the acceptance verdicts and prints them once at the end of the run."""

ACCEPTANCE = {}


def record(number, title, ok, seconds, limit, detail=""):
    timely = seconds < limit
    verdict = "PASS" if ok and timely else "FAIL"
    note = f"{seconds:.1f}s of {limit:g}s"
    if not timely:
        note += ", over the time limit"
    ACCEPTANCE[number] = f"ACCEPTANCE {number} {verdict}: {title} ({note}){'; ' + detail if detail else ''}"
    print("\n" + ACCEPTANCE[number])
    return ok and timely


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
