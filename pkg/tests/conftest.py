"""Shared pytest config: deterministic hypothesis profile and a summary
table with one PASS/FAIL line per acceptance test."""

from hypothesis import settings

settings.register_profile("repo", max_examples=100, deadline=None, derandomize=True)
settings.load_profile("repo")

_labels: dict[str, str] = {}
_outcomes: dict[str, str] = {}


def pytest_collection_modifyitems(config, items):
    for item in items:
        if "test_acceptance.py" in item.nodeid:
            doc = (getattr(item.obj, "__doc__", None) or "").strip().splitlines()
            _labels[item.nodeid] = doc[0] if doc else item.name


def pytest_runtest_logreport(report):
    if report.nodeid not in _labels:
        return
    if report.when == "call":
        _outcomes[report.nodeid] = report.outcome
    elif report.when == "setup" and report.outcome != "passed":
        _outcomes[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _labels:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_labels):
        outcome = _outcomes.get(nodeid, "notrun")
        tag = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{tag}  {_labels[nodeid]}")
