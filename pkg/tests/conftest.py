from pathlib import Path

import pytest

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"


@pytest.fixture
def programs_dir() -> Path:
    return PROGRAMS


_RESULTS: dict = {}


def analysis_of(name: str):
    """Cached default analysis of a corpus program."""
    from termdec.driver import analyze
    from termdec.frontend import parse_program
    if name not in _RESULTS:
        fmt = "cfg" if name.endswith(".cfg") else "wprog"
        _RESULTS[name] = analyze(parse_program((PROGRAMS / name).read_text(), fmt))
    return _RESULTS[name]


TERMINATING_PROGRAMS = ["sort.wprog", "sort.cfg", "nested.wprog", "two_phase.wprog",
                        "two_counters.wprog", "flip.wprog", "gap.wprog", "step_y.wprog",
                        "havoc_step.wprog", "havoc_bound.wprog", "havoc_descent.wprog",
                        "countdown_by_two.wprog", "straight.wprog"]


_CRITERIA: list[tuple[str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = "PASS" if rep.outcome == "passed" else "FAIL"
        line = f"[{status}] {mark.args[0]}"
        _CRITERIA.append((status, line))
        print("\n" + line)


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for _, line in _CRITERIA:
            terminalreporter.write_line(line)
