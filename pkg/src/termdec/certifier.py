"""Rank certificates for lasso modules, and an independent checker.

A certificate maps every location to a predicate over the program variables
and ``oldrnk``.  It is valid for ``f`` when the initial location says
``oldrnk = inf``, the fair location implies ``f ≺ oldrnk``, and every edge is
a valid Hoare triple, where edges leaving the fair location first perform
``oldrnk := f``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

from .automata import LassoTrace, Module
from .linear import ORANK, Atom, LinearTerm
from .logic import (FINITE, INF, OLDRNK_INF, Cube, Predicate,
                    PredicateTooComplex, EntailmentBudgetExceeded, entails,
                    equivalent, hoare_valid, rank_less, strongest_post)
from .program import Program, Statement, rank_update
from .ranker import RankerResult, RankingFunction, lasso_module_of

log = logging.getLogger(__name__)


class CertificateError(Exception):
    """The supporting invariant did not close the loop."""


@dataclass(frozen=True)
class CertifiedModule:
    module: Module
    rank: RankingFunction
    cert: Mapping[str, Predicate]
    trivial: bool = False
    lasso: LassoTrace | None = field(default=None, compare=False)

    def predicate(self, loc: str) -> Predicate:
        return self.cert[loc]


def _path(m: Module) -> list[tuple[str, object, str]]:
    """Edges of a lasso module in trace order, starting at the initial location."""
    p = m.program
    out, loc, seen = [], p.initial, set()
    while loc not in seen:
        seen.add(loc)
        succ = p.successors(loc)
        if len(succ) != 1:
            raise ValueError("not a lasso module")
        st, nxt = succ[0]
        out.append((loc, st, nxt))
        loc = nxt
    return out


def fin_predicate(f: LinearTerm, inv: Cube) -> Predicate:
    """``inv ∧ f ≺ oldrnk`` as an INF cube and a FINITE cube."""
    bound = [Atom.le(f - LinearTerm.var(ORANK), -1), Atom.ge(LinearTerm.var(ORANK), 0)]
    return Predicate.make([Cube.make(inv.atoms, INF),
                           Cube.make(list(inv.atoms) + bound, FINITE)])


def _split_eq(c: Cube) -> list[Atom]:
    out = []
    for a in c.atoms:
        if a.rel == "==":
            out += [Atom.make(a.term, "<="), Atom.make(-a.term, "<=")]
        else:
            out.append(a)
    return out


def _weaken(pred: Predicate, ok) -> Predicate:
    """Greedily drop atoms while ``ok`` keeps holding."""
    cubes = [(c.mode, _split_eq(c)) for c in pred.cubes]
    for i in range(len(cubes)):
        mode, atoms = cubes[i]
        for a in list(atoms):
            trial = [x for x in atoms if x is not a]
            cand = cubes[:i] + [(mode, trial)] + cubes[i + 1:]
            try:
                p = Predicate.make(Cube.make(at, md) for md, at in cand)
                good = ok(p)
            except (PredicateTooComplex, EntailmentBudgetExceeded):
                good = False
            if good:
                atoms = trial
                cubes[i] = (mode, atoms)
    return Predicate.make(Cube.make(at, md) for md, at in cubes)


def build_certificate(m: Module, f: RankingFunction, inv: Cube,
                      weaken: bool = True) -> dict[str, Predicate]:
    path = _path(m)
    fin = m.final
    ann: dict[str, Predicate] = {m.program.initial: OLDRNK_INF}
    pk = fin_predicate(f.term, inv)
    k = next(i for i, (src, _, _) in enumerate(path) if src == fin)
    for src, st, dst in path[:k]:
        if dst == fin:
            if not hoare_valid(ann[src], st, pk):
                raise CertificateError("stem does not establish the invariant")
        else:
            ann[dst] = strongest_post(ann[src], st)
    ann[fin] = pk
    for src, st, dst in path[k:]:
        stmts = [rank_update(f.term), st] if src == fin else [st]
        if dst == fin:
            if not hoare_valid(ann[src], stmts, pk):
                raise CertificateError(f"loop does not return to {pk}")
        else:
            ann[dst] = strongest_post(ann[src], stmts)
    if weaken:
        for src, st, dst in reversed(path):
            if src in (m.program.initial, fin):
                continue
            ann[src] = _weaken(ann[src], lambda p, st=st, dst=dst: hoare_valid(p, st, ann[dst]))
    return ann


def certify(res: RankerResult, weaken: bool = True) -> CertifiedModule:
    """Certified lasso module for a ranked or infeasible ranker result."""
    m = lasso_module_of(res.lasso)
    cert = build_certificate(m, res.f, res.inv, weaken)
    cm = CertifiedModule(m, res.f, cert, trivial=res.f.term == LinearTerm(), lasso=res.lasso)
    problems = check_certificate(cm)
    if problems:
        raise AssertionError("built certificate fails its check: " + "; ".join(problems))
    return cm


def check_certificate(cm: CertifiedModule) -> list[str]:
    """All violated certificate conditions; empty means the module is certified."""
    p = cm.module.program
    fin = cm.module.final
    out: list[str] = []
    missing = [l for l in p.locations if l not in cm.cert]
    if missing:
        return [f"no predicate for location {l}" for l in missing]
    if cm.module.partition_violation():
        out.append("module: " + cm.module.partition_violation())
    f = cm.rank.term

    def check(label, thunk):
        try:
            if not thunk():
                out.append(label)
        except (PredicateTooComplex, EntailmentBudgetExceeded) as e:
            out.append(f"{label} (undecided: {e})")

    check(f"initial: {cm.cert[p.initial]} is not oldrnk = inf",
          lambda: equivalent(cm.cert[p.initial], OLDRNK_INF))
    check(f"final: {cm.cert[fin]} does not imply {f} < oldrnk",
          lambda: entails(cm.cert[fin], rank_less(f)))
    for src, st, dst in p.edges:
        stmts = [rank_update(f), st] if src == fin else [st]
        check(f"edge {src} -[{st}]-> {dst}: triple not valid",
              lambda src=src, stmts=stmts, dst=dst:
              hoare_valid(cm.cert[src], stmts, cm.cert[dst]))
    return out


ERROR_LOC = "err"


def build_rankdecrease_program(t: LassoTrace, f: RankingFunction) -> Program:
    """Straight-line-then-loop program whose assertion failure is ``err``.

    It runs the stem, then repeatedly asserts ``f < oldrnk`` (failure goes to
    ``err``), sets ``oldrnk := f`` and runs the loop body.  Its initial
    location is meant to start in ``oldrnk = inf``; a Floyd-Hoare annotation
    that maps ``err`` to false is a rank certificate of the lasso module.
    """
    u, v = t.stem, t.loop
    init = "init"
    stem_locs = [init] + [f"s{i}" for i in range(1, len(u))]
    head = "head" if u else init
    locs = stem_locs[:len(u)] + [head]
    edges = [(locs[i], st, locs[i + 1]) for i, st in enumerate(u)]
    old = LinearTerm.var(ORANK)
    edges.append((head, Statement.assume([Atom.ge(f.term - old, 0)]), ERROR_LOC))
    edges.append((head, Statement.assume([Atom.le(old, -1)]), ERROR_LOC))
    body = ["upd"] + [f"b{i}" for i in range(1, len(v))] + [head]
    edges.append((head, rank_update(f.term), body[0]))
    edges += [(body[i], st, body[i + 1]) for i, st in enumerate(v)]
    return Program.build(init, edges, [ERROR_LOC])
