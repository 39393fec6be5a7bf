"""Affine ranking functions for lassos via Farkas' lemma.

A lasso ``u v^ω`` is summarised as a stem postcondition over the program
variables and a loop relation over current and primed copies.  Ranking
synthesis searches for ``f`` and a supporting invariant ``I`` with

    (i)   stem_post ⊨ I
    (ii)  I ∧ loop ⊨ I'
    (iii) I ∧ loop ⊨ f ≥ 0 ∧ f − f' ≥ 1

by encoding each entailment with Farkas multipliers and solving the
resulting linear system with the exact simplex.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .automata import LassoTrace, Module
from .linear import EQ, LE, Atom, LinearTerm
from .logic import (FALSE_ATOM, Cube, Predicate, _post_cube, entails, is_sat,
                    project_out, strongest_post, TRUE)
from .program import Program, Statement
from .simplex import solve

RANKED, INFEASIBLE, NO_RANK = "ranked", "infeasible-loop", "no-rank-found"


def primed(v: str) -> str:
    return v + "'"


@dataclass(frozen=True)
class RankingFunction:
    term: LinearTerm

    @property
    def coefficients(self) -> dict[str, Fraction]:
        return self.term.as_dict()

    @property
    def constant(self) -> Fraction:
        return self.term.const

    def __call__(self, nu) -> Fraction:
        return self.term.evaluate({v: nu.get(v, 0) for v in self.term.variables})

    def __str__(self) -> str:
        return str(self.term)


@dataclass(frozen=True)
class LassoRelation:
    stem_post: Cube
    loop_rel: Cube
    variables: tuple[str, ...]


@dataclass(frozen=True)
class RankerResult:
    kind: str
    f: RankingFunction | None = None
    inv: Cube | None = None
    lasso: LassoTrace | None = None
    relation: LassoRelation | None = None

    @property
    def ranked(self) -> bool:
        return self.kind == RANKED


def lasso_module_of(t: LassoTrace) -> Module:
    """Module whose only fair trace is ``t``: a stem chain into one cycle."""
    word = t.stem + t.loop
    n, k = len(word), len(t.stem)
    names = [f"l{i + 1}" for i in range(n)]
    edges = []
    for i, st in enumerate(word):
        edges.append((names[i], st, names[i + 1] if i + 1 < n else names[k]))
    return Module(Program.build(names[0], edges, names), names[k])


def _variables(stmts: Sequence[Statement]) -> tuple[str, ...]:
    return tuple(sorted(frozenset().union(*(s.variables for s in stmts))))


def summarize(t: LassoTrace) -> LassoRelation:
    vs = _variables(t.stem + t.loop)
    post = strongest_post(TRUE, list(t.stem))
    if post.is_false():
        stem = Cube.make([FALSE_ATOM])
    else:
        (stem,) = post.cubes
        stem = Cube.make(project_out(stem.atoms, [v for v in stem.variables if v not in vs]))
    ren = {v: primed(v) for v in vs}
    rel = Cube.make([Atom.eq(LinearTerm.var(primed(v)), LinearTerm.var(v)) for v in vs])
    for st in t.loop:
        rel = _post_cube(rel, st.rename(ren))
    keep = set(vs) | set(ren.values())
    rel = Cube.make(project_out(rel.atoms, [v for v in rel.variables if v not in keep]))
    return LassoRelation(stem, rel, vs)


# --------------------------------------------------------------------------
# Farkas encoding
#
# A parametric form maps each program variable (and "" for the constant) to
# a linear term over the unknowns of the LP.

class _Farkas:
    def __init__(self):
        self.constraints: list[Atom] = []
        self.nonneg: list[str] = []
        self.multipliers: list[str] = []
        self._n = 0

    def entails(self, premises: Sequence[Atom], target: dict[str, LinearTerm],
                extra: Sequence[dict[str, LinearTerm]] = ()) -> None:
        """Constrain: premises ∧ (each extra form ≤ 0) ⊨ target ≥ 0."""
        sums: dict[str, LinearTerm] = {k: v for k, v in target.items()}
        for a in premises:
            lam = f"lam{self._n}"
            self._n += 1
            self.multipliers.append(lam)
            if a.rel == LE:
                self.nonneg.append(lam)
            for v, c in a.term.coeffs:
                sums[v] = sums.get(v, LinearTerm()) + LinearTerm.var(lam, c)
            if a.term.const:
                sums[""] = sums.get("", LinearTerm()) + LinearTerm.var(lam, a.term.const)
        for e in extra:
            for v, t in e.items():
                sums[v] = sums.get(v, LinearTerm()) + t
        for v, t in sums.items():
            if v:
                self._add(Atom.make(t, EQ))
        self._add(Atom.make(-sums.get("", LinearTerm()), LE))

    def _add(self, a: Atom) -> None:
        if a.trivial_value() is True:
            return
        self.constraints.append(a)

    def solve(self) -> dict[str, Fraction] | None:
        if any(a.trivial_value() is False for a in self.constraints):
            return None
        objective = LinearTerm.of({m: 1 for m in self.nonneg})
        return solve(self.constraints, objective, self.nonneg)


def _unknown_form(prefix: str, vs: Sequence[str]) -> dict[str, LinearTerm]:
    out = {v: LinearTerm.var(f"{prefix}:{v}") for v in vs}
    out[""] = LinearTerm.var(f"{prefix}:1")
    return out


def _primed_form(form: dict[str, LinearTerm]) -> dict[str, LinearTerm]:
    return {(primed(v) if v else v): t for v, t in form.items()}


def _combine(*parts: tuple[int, dict[str, LinearTerm]], const: Fraction = Fraction(0)):
    out: dict[str, LinearTerm] = {"": LinearTerm.constant(const)}
    for k, form in parts:
        for v, t in form.items():
            out[v] = out.get(v, LinearTerm()) + t * k
    return out


def _value(form: dict[str, LinearTerm], sol: dict[str, Fraction]) -> LinearTerm:
    def ev(t: LinearTerm) -> Fraction:
        return t.evaluate({v: sol.get(v, Fraction(0)) for v in t.variables})
    return LinearTerm.of({v: ev(t) for v, t in form.items() if v}, ev(form[""]))


def _split(atoms: Sequence[Atom]) -> list[Atom]:
    out = []
    for a in atoms:
        if a.rel == EQ:
            out += [Atom.make(a.term, LE), Atom.make(-a.term, LE)]
        else:
            out.append(a)
    return out


def _infeasibility_core(rel: LassoRelation) -> Cube:
    """A small subset of the stem atoms that already makes the loop infeasible.

    Any such subset is a supporting invariant: the loop cannot be entered
    under it, so inductiveness and decrease hold vacuously.
    """
    atoms = _split(rel.stem_post.atoms)
    for a in list(atoms):
        trial = [x for x in atoms if x is not a]
        if not is_sat(Cube.make(trial + list(rel.loop_rel.atoms))):
            atoms = trial
    return Cube.make(atoms)


def _houdini(stem: Cube, rel: Cube, vs: Sequence[str]) -> list[Atom]:
    """Largest inductive subset of the (split) stem atoms."""
    ren = {v: primed(v) for v in vs}
    cands = [a for a in _split(stem.atoms) if a.variables <= set(vs)]
    changed = True
    while changed:
        changed = False
        pre = Predicate.of(list(cands) + list(rel.atoms))
        for a in list(cands):
            if not entails(pre, Predicate.of([a.rename(ren)])):
                cands.remove(a)
                changed = True
    return cands


def _rank_with(inv: Sequence[Atom], loop: Sequence[Atom], vs: Sequence[str],
               g: tuple | None = None) -> tuple[LinearTerm, LinearTerm | None] | None:
    """Solve for f (and optionally g ≥ 0 with fixed multipliers)."""
    fk = _Farkas()
    f = _unknown_form("f", vs)
    prem = list(inv) + list(loop)
    gform = None
    extra_bound, extra_dec = [], []
    if g is not None:
        stem, (m_bound, m_dec) = g
        gform = _unknown_form("g", vs)
        fk.entails(stem.atoms, gform)
        fk.entails(prem, _combine((1, _primed_form(gform)), (-1, gform)))
        neg_g = _combine((-1, gform))
        extra_bound = [neg_g] if m_bound else []
        extra_dec = [neg_g] if m_dec else []
    fk.entails(prem, f, extra_bound)
    fk.entails(prem, _combine((1, f), (-1, _primed_form(f)), const=Fraction(-1)), extra_dec)
    sol = fk.solve()
    if sol is None:
        return None
    return _value(f, sol), (_value(gform, sol) if gform else None)


def _drop_order(a: Atom) -> tuple:
    # guards over few current-state variables first, transition atoms last
    primes = sum(1 for v in a.variables if v.endswith("'"))
    return (primes > 0, len(a.variables), str(a))


def _generalize(inv, loop, vs, g, got):
    """Drop premises the ranking argument does not need.

    A lasso's loop relation carries facts specific to that one path (such
    as concrete values fixed by the path).  A ranking function and
    invariant that avoid them generalise to more traces of the program.
    """
    for a in sorted(loop, key=_drop_order):
        trial = [x for x in loop if x is not a]
        res = _rank_with(inv, trial, vs, g)
        if res is not None:
            loop, got = trial, res
    ren = {v: primed(v) for v in vs}
    for a in sorted(inv, key=_drop_order):
        trial = [x for x in inv if x is not a]
        res = _rank_with(trial, loop, vs, g)
        if res is None:
            continue
        step = Predicate.of(trial + loop)
        if all(entails(step, Predicate.of([b.rename(ren)])) for b in trial):
            inv, got = trial, res
    return inv, loop, got


def _validate(rel: LassoRelation, f: LinearTerm, inv: Cube) -> bool:
    ren = {v: primed(v) for v in rel.variables}
    stem = Predicate.make([rel.stem_post])
    step = Predicate.make([inv.conjoin(rel.loop_rel.atoms)])
    fp = f.rename(ren)
    return (entails(stem, Predicate.make([inv]))
            and entails(step, Predicate.of([a.rename(ren) for a in inv.atoms]))
            and entails(step, Predicate.of([Atom.ge(f, 0), Atom.ge(f - fp, 1)])))


def synthesize(rel: LassoRelation) -> RankerResult:
    """Ranked(f, I), InfeasibleLoop, or NoRankFound for one lasso relation."""
    infeasible = RankerResult(INFEASIBLE, RankingFunction(LinearTerm()),
                              Cube.make([]), relation=rel)
    if not is_sat(rel.loop_rel):
        return infeasible
    # a loop that is only infeasible after this stem is still ranked if
    # possible, since a ranking function covers more traces than the stem
    stuck = not is_sat(rel.stem_post.conjoin(rel.loop_rel.atoms))
    vs = rel.variables
    attempts: list[tuple[list[Atom], tuple | None]] = [([], None)]
    hou = _houdini(rel.stem_post, rel.loop_rel, vs)
    if hou:
        attempts.append((hou, None))
    for mult in ((0, 0), (1, 0), (0, 1), (1, 1)):
        attempts.append((hou, (rel.stem_post, mult)))
    for inv, g in attempts:
        loop = list(rel.loop_rel.atoms)
        got = _rank_with(inv, loop, vs, g)
        if got is None:
            continue
        inv, loop, (f, gt) = _generalize(inv, loop, vs, g, got)
        atoms = list(inv) + ([Atom.ge(gt, 0)] if gt is not None else [])
        cube = Cube.make(atoms)
        if not is_sat(cube.conjoin(rel.loop_rel.atoms)):
            break  # the invariant only shows that the loop cannot be entered
        scaled = f.scale_to_integers()
        # a zero constant often validates too and reads better
        for cand in (scaled - scaled.const, scaled, f):
            if _validate(rel, cand, cube):
                return RankerResult(RANKED, RankingFunction(cand), cube, relation=rel)
        raise AssertionError(f"Farkas solution {f} failed re-validation")
    if stuck:
        return RankerResult(INFEASIBLE, RankingFunction(LinearTerm()),
                            _infeasibility_core(rel), relation=rel)
    return RankerResult(NO_RANK, relation=rel)


def rank_lasso(t: LassoTrace) -> RankerResult:
    """Synthesize for ``t`` (stem made non-empty), retrying once with the loop doubled.

    The returned result carries the lasso it refers to, which is the one
    the lasso module must be built from.
    """
    t = t.with_stem()
    res = synthesize(summarize(t))
    if res.kind == NO_RANK:
        t2 = t.unrolled(2)
        res2 = synthesize(summarize(t2))
        if res2.kind != NO_RANK:
            return _with_lasso(res2, t2)
    return _with_lasso(res, t)


def _with_lasso(res: RankerResult, t: LassoTrace) -> RankerResult:
    return RankerResult(res.kind, res.f, res.inv, t, res.relation)
