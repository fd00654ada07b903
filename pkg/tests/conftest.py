import pytest

_acceptance_outcomes = {}

_CRITERIA_LABELS = {
    "01": "choi template match",
    "02": "affine basis consistency",
    "03": "noiseless identifiability",
    "04": "fisher closed form",
    "05": "optimal direction argmax",
    "06": "statistical accuracy at benchmark scale",
    "07": "direction estimation",
    "08": "robustness reproduction",
    "09": "solver oracle equivalence",
    "10": "cptp boundary detection",
}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and item.module.__name__.endswith("test_acceptance"):
        _acceptance_outcomes[item.name] = report.passed


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance_outcomes):
        # names look like test_criterion_03_noiseless_identifiability
        num = name.split("_")[2]
        label = _CRITERIA_LABELS.get(num, name)
        status = "PASS" if _acceptance_outcomes[name] else "FAIL"
        terminalreporter.write_line(f"criterion {int(num):2d} ({label}): {status}")
