"""Acceptance criteria; each test prints one PASS/FAIL line and the summary lists them all."""

import random
import time

import pytest

from conftest import PROGRAMS, TERMINATING_PROGRAMS
from oracles import (accepts_lasso, all_lassos, certificate_counterexample, fm_case, lasso,
                     mutate, random_buchi, scc_nonempty, simulate_module)
from termdec.automata import Intersection, LassoTrace, complement, is_empty, lasso_member
from termdec.certifier import check_certificate
from termdec.driver import TERMINATING, UNKNOWN, AnalysisConfig, analyze
from termdec.frontend import parse_program
from termdec.ranker import INFEASIBLE, NO_RANK, RANKED, rank_lasso


def load(name):
    return parse_program((PROGRAMS / name).read_text(), "cfg" if name.endswith(".cfg") else "wprog")


_SORT = {}


def sort_run():
    if "res" not in _SORT:
        t0 = time.monotonic()
        _SORT["res"] = analyze(load("sort.wprog"))
        _SORT["secs"] = time.monotonic() - t0
    return _SORT["res"], _SORT["secs"]


@pytest.mark.criterion("bubblesort: TERMINATING with f ~ i - j and f ~ i, <= 10 iterations, < 10 s")
def test_bubblesort_end_to_end():
    res, secs = sort_run()
    assert res.verdict == TERMINATING
    assert res.stats.iterations <= 10
    assert secs < 10
    coeffs = [em.rank.coefficients for em in res.modules]
    # up to positive scaling and an additive constant
    assert any(c.get("i", 0) > 0 and c.get("j", 0) < 0 and c["i"] == -c["j"] for c in coeffs)
    assert any(c.get("i", 0) > 0 and c.get("j", 0) == 0 and set(c) == {"i"} for c in coeffs)


@pytest.mark.criterion("certificate checker: all emitted modules pass, >= 50 mutations with 0 false accepts")
def test_certificate_checker_soundness():
    modules = []
    for name in ["sort.wprog", "nested.wprog", "step_y.wprog", "gap.wprog", "two_phase.wprog"]:
        res = analyze(load(name))
        assert res.verdict == TERMINATING
        for em in res.modules:
            for cm in (em.cm, em.materialize()):
                assert check_certificate(cm) == []
                modules.append(cm)
    rng = random.Random(2024)
    broken = false_accepts = 0
    n = 60
    for _ in range(n):
        kind, m = mutate(rng.choice(modules), rng)
        accepted = check_certificate(m) == []
        refuted = certificate_counterexample(m, range(-3, 4)) is not None
        broken += refuted
        false_accepts += accepted and refuted
    print(f"\n{n} mutations, {broken} concretely broken, {false_accepts} false accepts")
    assert false_accepts == 0
    assert broken >= 15


@pytest.mark.criterion("rank decrease: 1000 simulated runs per bubblesort module, 0 violations")
def test_simulated_rank_decrease():
    res, _ = sort_run()
    rng = random.Random(7)
    repeated = 0
    for em in res.modules:
        cm = em.materialize()
        for _ in range(1000):
            violations, visits = simulate_module(cm, rng, steps=40, box=(-20, 20))
            assert violations == []
            repeated += visits >= 2
    assert repeated > 0


@pytest.mark.criterion("complementation: 200 random automata, membership XOR and empty intersection, < 120 s")
def test_complementation_oracle():
    t0 = time.monotonic()
    for seed in range(200):
        rng = random.Random(seed)
        a = random_buchi(rng, rng.randint(1, 5), rng.randint(1, 3), rng.uniform(0.3, 0.8))
        c = complement(a)
        seen = set()
        for u, v in all_lassos(a.alphabet, 3, 4):
            # lassos denoting the same word are checked once
            t = LassoTrace(u, v).normal_form()
            if t in seen:
                continue
            seen.add(t)
            assert lasso_member(a, t) != lasso_member(c, t), (seed, t)
        assert is_empty(Intersection(a, c)) is None, seed
    assert time.monotonic() - t0 < 120


@pytest.mark.criterion("emptiness: agrees with an SCC oracle on 500 random automata, lassos accepted")
def test_emptiness_oracle():
    for seed in range(500):
        rng = random.Random(10_000 + seed)
        a = random_buchi(rng, rng.randint(1, 12), rng.randint(1, 3), rng.uniform(0.2, 0.8))
        t = is_empty(a)
        assert (t is None) == (not scc_nonempty(a)), seed
        if t is not None:
            assert lasso_member(a, t) and accepts_lasso(a, t.stem, t.loop)


@pytest.mark.criterion("ranker: countdown ranked, increment unranked, infeasible loop, sort sign pattern")
def test_ranker_truths():
    r = rank_lasso(lasso("havoc x", "assume x >= 0; x := x - 1"))
    assert r.kind == RANKED and r.f.coefficients["x"] > 0
    assert rank_lasso(lasso("havoc x", "x := x + 1")).kind == NO_RANK
    assert rank_lasso(lasso("havoc x", "assume x >= 1; x := 0; assume x >= 1")).kind == INFEASIBLE
    r = rank_lasso(lasso("assume i >= 1; j := 1", "assume j - i <= -1; j := j + 1"))
    assert r.kind == RANKED and r.f.coefficients["i"] > 0 and r.f.coefficients["j"] < 0
    assert all(type(c).__name__ == "Fraction" for c in r.f.coefficients.values())


@pytest.mark.criterion("logic engine: 300 generated cases agree with brute force over [-6,6]^k")
def test_logic_engine_corpus():
    gaps = 0
    for seed in range(300):
        fails, g = fm_case(random.Random(50_000 + seed))
        assert fails == [], (seed, fails)
        gaps += len(g)
    print(f"\n{gaps} rational-relaxation gaps, each confirmed by a rational witness")


@pytest.mark.criterion("diverging loop is UNKNOWN with its lasso; straight-line code terminates in 0 iterations")
def test_nonterminating_and_straight_line():
    res = analyze(load("diverge.wprog"))
    assert res.verdict == UNKNOWN and res.lasso is not None
    assert "x := x + 1" in {str(s) for s in res.lasso.loop}
    res = analyze(load("straight.wprog"))
    assert res.verdict == TERMINATING and res.stats.iterations == 0


@pytest.mark.criterion("regression suite: >= 8 terminating programs, all TERMINATING, < 60 s")
def test_regression_suite():
    assert len(TERMINATING_PROGRAMS) >= 8
    t0 = time.monotonic()
    for name in TERMINATING_PROGRAMS:
        res = analyze(load(name), AnalysisConfig(timeout=60))
        assert res.verdict == TERMINATING, (name, res.reason)
    assert time.monotonic() - t0 < 60
