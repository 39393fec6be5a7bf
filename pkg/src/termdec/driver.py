"""The refinement loop: decompose a program into certified modules."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Sequence

from .automata import (Automaton, Buchi, Complement, LassoTrace, MultiIntersection,
                       StateBudgetExceeded, is_empty, lasso_member, program_to_buchi,
                       quotient, trim)
from .certifier import CertifiedModule, certify, check_certificate
from .extended import ExtendedModule
from .logic import PredicateTooComplex
from .program import Program
from .ranker import NO_RANK, RankerResult, rank_lasso

log = logging.getLogger(__name__)

TERMINATING, UNKNOWN, BUDGET_EXHAUSTED = "TERMINATING", "UNKNOWN", "BUDGET_EXHAUSTED"


class SoundnessError(AssertionError):
    """A produced module or the final emptiness check failed re-verification."""


@dataclass
class AnalysisConfig:
    max_iterations: int = 50
    timeout: float = 60.0
    state_budget: int = 200_000
    check_certificates: bool = True
    emit_remainder: bool = False

    def __post_init__(self):
        if self.max_iterations <= 0 or self.timeout <= 0 or self.state_budget <= 0:
            raise ValueError("configuration values must be positive")


@dataclass
class Stats:
    overall: float = 0.0
    lasso_analysis: float = 0.0
    module_construction: float = 0.0
    inclusion: float = 0.0
    iterations: int = 0
    modules_trivial_rf: int = 0
    modules_nontrivial_rf: int = 0
    max_module_size: int = 0


@dataclass
class AnalysisResult:
    verdict: str
    program: Program
    modules: list[ExtendedModule] = field(default_factory=list)
    lasso: LassoTrace | None = None
    reason: str = ""
    remainder: Automaton | None = None
    history: list[LassoTrace] = field(default_factory=list)
    stats: Stats = field(default_factory=Stats)

    @property
    def certified(self) -> list[CertifiedModule]:
        return [em.cm for em in self.modules]


def lasso_normal_form(t: LassoTrace) -> LassoTrace:
    return t.normal_form()


def progress_guarantee_check(history: Sequence[LassoTrace]) -> bool:
    """True iff no ω-word occurs twice among the extracted lassos."""
    forms = [t.normal_form() for t in history]
    return len(set(forms)) == len(forms)


def subtract(rem: Automaton, em: ExtendedModule, budget: int,
             deadline: float | None = None) -> Buchi:
    """Trimmed explicit automaton for ``L(rem)`` minus ``L(em)``."""
    top = 3 if em.semi_deterministic else None
    comp = Complement(em, budget=budget, max_rank=top)
    return quotient(trim(MultiIntersection(rem, [comp]), budget, deadline))


def remainder(p: Program, modules: Sequence[ExtendedModule], budget: int,
              deadline: float | None = None) -> Buchi:
    """The program's traces not covered by any module, computed from scratch."""
    rem = quotient(trim(program_to_buchi(p)))
    for em in modules:
        rem = subtract(rem, em, budget, deadline)
    return rem


def analyze(p: Program, cfg: AnalysisConfig | None = None) -> AnalysisResult:
    """Decompose ``p`` into certified modules until no uncovered lasso remains.

    The set of uncovered traces is kept as an explicit automaton that is
    trimmed after subtracting each new module, so every module is
    complemented exactly once.
    """
    cfg = cfg or AnalysisConfig()
    start = time.monotonic()
    deadline = start + cfg.timeout
    res = AnalysisResult(UNKNOWN, p)
    st = res.stats
    rem: Buchi = quotient(trim(program_to_buchi(p)))

    def finish(verdict: str, reason: str = "", lasso: LassoTrace | None = None):
        res.verdict, res.reason, res.lasso = verdict, reason, lasso
        if verdict != TERMINATING and cfg.emit_remainder:
            res.remainder = rem
        st.overall = time.monotonic() - start
        return res

    while True:
        t0 = time.monotonic()
        lasso = is_empty(rem)
        st.inclusion += time.monotonic() - t0
        if lasso is None:
            _soundness_gate(p, res.modules, cfg)
            return finish(TERMINATING)
        if st.iterations >= cfg.max_iterations:
            return finish(BUDGET_EXHAUSTED, f"iteration limit {cfg.max_iterations} reached", lasso)
        if time.monotonic() > deadline:
            return finish(BUDGET_EXHAUSTED, "timeout", lasso)
        st.iterations += 1
        res.history.append(lasso)
        for em in res.modules:
            if lasso_member(em, lasso):
                raise SoundnessError(f"counterexample {lasso} is already covered")
        log.info("iteration %d: lasso %s", st.iterations, lasso)

        t0 = time.monotonic()
        try:
            ranked: RankerResult = rank_lasso(lasso)
        except PredicateTooComplex as e:
            st.lasso_analysis += time.monotonic() - t0
            return finish(UNKNOWN, f"lasso analysis gave up: {e}", lasso)
        st.lasso_analysis += time.monotonic() - t0
        if ranked.kind == NO_RANK:
            return finish(UNKNOWN, "no ranking function for lasso", lasso)

        t0 = time.monotonic()
        try:
            cm = certify(ranked)
        except PredicateTooComplex as e:
            st.module_construction += time.monotonic() - t0
            return finish(UNKNOWN, f"certificate construction gave up: {e}", lasso)
        em = ExtendedModule(cm, p.alphabet)
        if not lasso_member(em, lasso):
            raise SoundnessError("extended module lost its own lasso")
        st.module_construction += time.monotonic() - t0
        res.modules.append(em)
        if cm.trivial:
            st.modules_trivial_rf += 1
        else:
            st.modules_nontrivial_rf += 1
        st.max_module_size = max(st.max_module_size, len(em))
        log.info("module %d: f = %s, %d states", len(res.modules), cm.rank, len(em))

        t0 = time.monotonic()
        try:
            rem = subtract(rem, em, cfg.state_budget, deadline)
        except StateBudgetExceeded as e:
            st.inclusion += time.monotonic() - t0
            return finish(BUDGET_EXHAUSTED, str(e))
        st.inclusion += time.monotonic() - t0


def _soundness_gate(p: Program, modules: Sequence[ExtendedModule],
                    cfg: AnalysisConfig) -> None:
    """Re-check every certificate and the emptiness of the difference."""
    if cfg.check_certificates:
        for k, em in enumerate(modules):
            for cm in (em.cm, em.materialize()):
                problems = check_certificate(cm)
                if problems:
                    raise SoundnessError(f"module {k}: " + "; ".join(problems))
    fresh = remainder(p, modules, cfg.state_budget)
    if is_empty(fresh) is not None:
        raise SoundnessError("difference is not empty on re-check")
