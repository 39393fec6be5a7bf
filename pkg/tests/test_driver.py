import pytest

import termdec.driver as drv
from conftest import PROGRAMS, TERMINATING_PROGRAMS, analysis_of
from oracles import scc_nonempty
from termdec.automata import lasso_member
from termdec.driver import (BUDGET_EXHAUSTED, TERMINATING, UNKNOWN, AnalysisConfig,
                            SoundnessError, analyze, progress_guarantee_check, remainder)
from termdec.frontend import parse_program


def load(name):
    return parse_program((PROGRAMS / name).read_text(), "cfg" if name.endswith(".cfg") else "wprog")


@pytest.mark.parametrize("name", TERMINATING_PROGRAMS)
def test_corpus_programs_terminate(name):
    res = analysis_of(name)
    assert res.verdict == TERMINATING, res.reason
    st = res.stats
    assert st.modules_trivial_rf + st.modules_nontrivial_rf == len(res.modules) == st.iterations
    assert progress_guarantee_check(res.history)
    assert min(st.overall, st.lasso_analysis, st.module_construction, st.inclusion) >= 0


@pytest.mark.parametrize("name", ["sort.wprog", "nested.wprog", "two_phase.wprog"])
def test_decomposition_covers_every_trace(name):
    res = analysis_of(name)
    rem = remainder(res.program, res.modules, 200_000)
    assert not scc_nonempty(rem)


def test_lassos_are_covered_by_their_own_modules():
    res = analysis_of("sort.wprog")
    for t, em in zip(res.history, res.modules):
        assert lasso_member(em, t)


def test_sort_finds_the_expected_ranking_functions():
    res = analysis_of("sort.wprog")
    coeffs = [em.rank.coefficients for em in res.modules]
    assert any(c.get("i", 0) > 0 and c.get("j", 0) < 0 for c in coeffs)
    assert any(c.get("i", 0) > 0 and c.get("j", 0) == 0 for c in coeffs)


def test_nonterminating_program_reports_its_lasso():
    res = analyze(load("diverge.wprog"), AnalysisConfig(emit_remainder=True))
    assert res.verdict == UNKNOWN
    assert "x := x + 1" in {str(s) for s in res.lasso.loop}
    assert res.remainder is not None and scc_nonempty(res.remainder)


def test_straight_line_program_needs_no_iteration():
    res = analysis_of("straight.wprog")
    assert res.verdict == TERMINATING and res.stats.iterations == 0 and not res.modules


def test_budgets():
    res = analyze(load("up_down.wprog"), AnalysisConfig(state_budget=500))
    assert res.verdict == BUDGET_EXHAUSTED
    res = analyze(load("sort.wprog"), AnalysisConfig(max_iterations=1))
    assert res.verdict == BUDGET_EXHAUSTED and "iteration" in res.reason


@pytest.mark.parametrize("kw", [{"max_iterations": 0}, {"timeout": -1}, {"state_budget": 0}])
def test_config_rejects_nonpositive_values(kw):
    with pytest.raises(ValueError):
        AnalysisConfig(**kw)


def test_progress_guarantee_check_detects_repeats():
    res = analysis_of("sort.wprog")
    t = res.history[0]
    rotated = type(t)(t.stem + t.loop, t.loop)
    assert not progress_guarantee_check([t, rotated])


def test_a_failing_certificate_stops_the_run(monkeypatch):
    monkeypatch.setattr(drv, "check_certificate", lambda cm: ["forged violation"])
    with pytest.raises(SoundnessError):
        analyze(load("two_counters.wprog"))
