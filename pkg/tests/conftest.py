import sys, pathlib
sys.path.insert(0, str(pathlib.Path(__file__).parent))

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    for key, value in report.user_properties:
        if key == "acceptance":
            number, text = value
            _ACCEPTANCE[number] = f"criterion {number:2d}: {'PASS' if report.passed else 'FAIL'}  {text}"


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])
