"""Exact linear arithmetic over the rationals, extended by the ``oldrnk`` variable.

Predicates are disjunctions of cubes.  Every cube carries a mode for the
auxiliary variable: ``INF`` (oldrnk is infinity), ``FINITE`` (oldrnk is an
ordinary rational variable that atoms may mention) or ``ABSENT`` (oldrnk is
unconstrained and not mentioned).  Infinity is never an atom.

Satisfiability and projection use Fourier-Motzkin elimination with equality
substitution.  All questions are answered over the rationals, which is sound
for Hoare-triple validity of integer programs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import count
from typing import Iterable, Mapping, Sequence

from .linear import EQ, LE, LT, ORANK, Atom, LinearTerm
from .program import ASSIGN, ASSUME, HAVOC, Statement

INF, FINITE, ABSENT = "inf", "finite", "absent"

MAX_CUBES = 4
MAX_ATOMS = 64
ENTAIL_LIMIT = 50_000
_PRUNE_AT = 12

FALSE_ATOM = Atom(LinearTerm.constant(1), LE)


class PredicateTooComplex(Exception):
    """A predicate exceeded the cube/atom caps, or entailment exceeded its split budget."""


class EntailmentBudgetExceeded(PredicateTooComplex):
    """The entailment case split ran out of budget; the answer is unknown."""


# --------------------------------------------------------------------------
# atom-list machinery


def _direction(term: LinearTerm) -> tuple[LinearTerm, Fraction]:
    """Split ``term`` into (primitive direction with positive lead, scale)."""
    prim = LinearTerm(term.coeffs).scale_to_integers()
    if prim.coeffs[0][1] < 0:
        prim = -prim
    return prim, term.coeffs[0][1] / prim.coeffs[0][1]


def simplify(atoms: Iterable[Atom]) -> list[Atom]:
    """Drop trivial atoms and keep only the tightest bound per direction.

    Returns ``[FALSE_ATOM]`` when a contradiction is detected on the way.
    """
    bounds: dict[LinearTerm, list] = {}
    for a in atoms:
        tv = a.trivial_value()
        if tv is True:
            continue
        if tv is False:
            return [FALSE_ATOM]
        d, s = _direction(a.term)
        # a.term = s*d + c  ->  bound on d
        val = -a.term.const / s
        lo, hi = bounds.setdefault(d, [None, None])
        if a.rel == EQ:
            lo = _tighter_lo(lo, (val, False))
            hi = _tighter_hi(hi, (val, False))
        elif s > 0:
            hi = _tighter_hi(hi, (val, a.rel == LT))
        else:
            lo = _tighter_lo(lo, (val, a.rel == LT))
        bounds[d] = [lo, hi]
    out: list[Atom] = []
    for d, (lo, hi) in bounds.items():
        if lo is not None and hi is not None:
            if lo[0] > hi[0] or (lo[0] == hi[0] and (lo[1] or hi[1])):
                return [FALSE_ATOM]
            if lo[0] == hi[0]:
                out.append(Atom.make(d - lo[0], EQ))
                continue
        if lo is not None:
            out.append(Atom.make(lo[0] - d, LT if lo[1] else LE))
        if hi is not None:
            out.append(Atom.make(d - hi[0], LT if hi[1] else LE))
    out.sort(key=str)
    return out


def _tighter_lo(a, b):
    if a is None:
        return b
    if b[0] > a[0] or (b[0] == a[0] and b[1]):
        return b
    return a


def _tighter_hi(a, b):
    if a is None:
        return b
    if b[0] < a[0] or (b[0] == a[0] and b[1]):
        return b
    return a


def _variables(atoms: Iterable[Atom]) -> set[str]:
    out: set[str] = set()
    for a in atoms:
        out |= a.variables
    return out


def _project(atoms: Sequence[Atom], v: str) -> list[Atom]:
    """One Fourier-Motzkin step: the atoms' projection along ``v``."""
    for e in atoms:
        c = e.term.coeff(v)
        if e.rel == EQ and c != 0:
            rest = LinearTerm(tuple(p for p in e.term.coeffs if p[0] != v), e.term.const)
            sol = rest * (-1 / c)
            return simplify(a.substitute(v, sol) for a in atoms if a is not e)
    lower, upper, keep = [], [], []
    for a in atoms:
        c = a.term.coeff(v)
        if c == 0:
            keep.append(a)
        elif c > 0:
            upper.append(a)
        else:
            lower.append(a)
    for lo in lower:
        cl = -lo.term.coeff(v)
        for up in upper:
            cu = up.term.coeff(v)
            rel = LT if LT in (lo.rel, up.rel) else LE
            keep.append(Atom.make(lo.term * cu + up.term * cl, rel))
    return simplify(keep)


def _pick_var(atoms: Sequence[Atom], candidates: Iterable[str]) -> str:
    def cost(v):
        if any(a.rel == EQ and a.term.coeff(v) != 0 for a in atoms):
            return (-1, v)
        pos = sum(1 for a in atoms if a.term.coeff(v) > 0)
        neg = sum(1 for a in atoms if a.term.coeff(v) < 0)
        return (pos * neg - pos - neg, v)
    return min(candidates, key=cost)


def project_out(atoms: Sequence[Atom], vs: Iterable[str]) -> list[Atom]:
    todo = set(vs) & _variables(atoms)
    atoms = simplify(atoms)
    while todo and atoms != [FALSE_ATOM]:
        v = _pick_var(atoms, todo)
        todo.discard(v)
        atoms = _project(atoms, v)
        if len(atoms) > _PRUNE_AT:
            atoms = _prune_redundant(atoms)
    return atoms


def _prune_redundant(atoms: list[Atom]) -> list[Atom]:
    kept = list(atoms)
    for a in list(atoms):
        if a.rel == EQ:
            continue
        rest = [b for b in kept if b is not a]
        if all(find_point(rest + [n]) is None for n in a.negations()):
            kept = rest
    return kept


def find_point(atoms: Sequence[Atom]) -> dict[str, Fraction] | None:
    """A rational point satisfying all atoms, or ``None`` if there is none.

    Eliminates variables one at a time, then back-substitutes, preferring
    integer values close to zero.
    """
    systems = [simplify(atoms)]
    order: list[str] = []
    todo = _variables(systems[0])
    while todo:
        if systems[-1] == [FALSE_ATOM]:
            return None
        v = _pick_var(systems[-1], todo)
        todo.discard(v)
        order.append(v)
        systems.append(_project(systems[-1], v))
    if systems[-1] == [FALSE_ATOM] or any(a.trivial_value() is False for a in systems[-1]):
        return None
    point: dict[str, Fraction] = {}
    for k in reversed(range(len(order))):
        v = order[k]
        lo = hi = None
        fixed = None
        for a in systems[k]:
            c = a.term.coeff(v)
            if c == 0:
                continue
            others = LinearTerm(tuple(p for p in a.term.coeffs if p[0] != v), a.term.const)
            rhs = -others.evaluate(point) / c   # a: c*v + rest rel 0
            if a.rel == EQ:
                fixed = rhs
            elif c > 0:
                hi = _tighter_hi(hi, (rhs, a.rel == LT))
            else:
                lo = _tighter_lo(lo, (rhs, a.rel == LT))
        point[v] = fixed if fixed is not None else _choose(lo, hi)
    return point


def _choose(lo, hi) -> Fraction:
    ilo = None if lo is None else (math.floor(lo[0]) + 1 if lo[1] else math.ceil(lo[0]))
    ihi = None if hi is None else (math.ceil(hi[0]) - 1 if hi[1] else math.floor(hi[0]))
    cand = 0
    if ilo is not None:
        cand = max(cand, ilo)
    if ihi is not None:
        cand = min(cand, ihi)
    if (ilo is None or cand >= ilo) and (ihi is None or cand <= ihi):
        return Fraction(cand)
    return (lo[0] + hi[0]) / 2


# --------------------------------------------------------------------------
# cubes


def _meet(m1: str, m2: str) -> str | None:
    if m1 == ABSENT:
        return m2
    if m2 == ABSENT or m1 == m2:
        return m1
    return None


@dataclass(frozen=True)
class Cube:
    atoms: tuple[Atom, ...] = ()
    mode: str = ABSENT

    @staticmethod
    def make(atoms: Iterable[Atom], mode: str = ABSENT) -> Cube:
        atoms = simplify(atoms)
        if mode != FINITE and any(ORANK in a.variables for a in atoms):
            raise ValueError(f"{mode} cube may not mention {ORANK}")
        return Cube(tuple(atoms), mode)

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(_variables(self.atoms))

    def conjoin(self, atoms: Iterable[Atom]) -> Cube:
        return Cube.make(list(self.atoms) + list(atoms), self.mode)

    def meet(self, other: Cube) -> Cube | None:
        m = _meet(self.mode, other.mode)
        if m is None:
            return None
        return Cube.make(self.atoms + other.atoms, m)

    def evaluate(self, nu: Mapping[str, object]) -> bool:
        old = nu.get(ORANK, math.inf)
        if self.mode == INF and old != math.inf:
            return False
        if self.mode == FINITE and old == math.inf:
            return False
        return all(a.holds(nu) for a in self.atoms)

    def __str__(self) -> str:
        parts = [str(a) for a in self.atoms]
        if self.mode == INF:
            parts.insert(0, f"{ORANK} = inf")
        elif self.mode == FINITE and not any(ORANK in a.variables for a in self.atoms):
            parts.insert(0, f"{ORANK} < inf")
        return " && ".join(parts) if parts else "true"


def is_sat(c: Cube) -> bool:
    return find_point(c.atoms) is not None


def witness(c: Cube) -> dict[str, Fraction] | None:
    return find_point(c.atoms)


def eliminate(c: Cube, v: str) -> Cube:
    if v == ORANK and c.mode != FINITE:
        return c
    return Cube.make(project_out(c.atoms, [v]), c.mode)


# --------------------------------------------------------------------------
# predicates


@dataclass(frozen=True)
class Predicate:
    """Finite disjunction of cubes; the empty disjunction is FALSE."""

    cubes: tuple[Cube, ...] = ()

    @staticmethod
    def make(cubes: Iterable[Cube | None]) -> Predicate:
        live = []
        seen = set()
        for c in cubes:
            if c is None or c in seen or not is_sat(c):
                continue
            seen.add(c)
            if len(c.atoms) > MAX_ATOMS:
                raise PredicateTooComplex(f"cube with {len(c.atoms)} atoms")
            live.append(c)
        live.sort(key=str)
        kept = list(live)
        for c in live:
            if any(_cube_entails(c, [d]) for d in kept if d is not c):
                kept.remove(c)
        kept.sort(key=str)
        if len(kept) > MAX_CUBES:
            raise PredicateTooComplex(f"predicate with {len(kept)} cubes")
        return Predicate(tuple(kept))

    @staticmethod
    def of(atoms: Iterable[Atom] = (), mode: str = ABSENT) -> Predicate:
        return Predicate.make([Cube.make(atoms, mode)])

    @property
    def variables(self) -> frozenset[str]:
        return frozenset().union(*(c.variables for c in self.cubes))

    def is_false(self) -> bool:
        return not self.cubes

    def __and__(self, other: Predicate) -> Predicate:
        return Predicate.make(a.meet(b) for a in self.cubes for b in other.cubes)

    def __or__(self, other: Predicate) -> Predicate:
        return Predicate.make(self.cubes + other.cubes)

    def conjoin(self, atoms: Iterable[Atom]) -> Predicate:
        atoms = list(atoms)
        return Predicate.make(c.conjoin(atoms) for c in self.cubes)

    def __str__(self) -> str:
        if not self.cubes:
            return "{false}"
        return "{" + " || ".join(str(c) for c in self.cubes) + "}"

    def to_json(self) -> list:
        return [cube_to_json(c) for c in self.cubes]

    @staticmethod
    def from_json(data: list) -> Predicate:
        return Predicate.make(cube_from_json(c) for c in data)


TRUE = Predicate((Cube(),))
FALSE = Predicate(())
OLDRNK_INF = Predicate((Cube((), INF),))


def rank_less(f: LinearTerm) -> Predicate:
    """``f ≺ oldrnk``: either oldrnk is infinite, or f < oldrnk and oldrnk >= 0."""
    old = LinearTerm.var(ORANK)
    return Predicate.make([
        Cube((), INF),
        Cube.make([Atom.le(f - old, -1), Atom.ge(old, 0)], FINITE),
    ])


def atom_to_json(a: Atom) -> dict:
    return {"coeffs": {v: str(c) for v, c in a.term.coeffs}, "const": str(a.term.const), "rel": a.rel}


def atom_from_json(d: dict) -> Atom:
    t = LinearTerm.of({v: Fraction(c) for v, c in d["coeffs"].items()}, Fraction(d["const"]))
    return Atom.make(t, d["rel"])


def cube_to_json(c: Cube) -> dict:
    return {"mode": c.mode, "atoms": [atom_to_json(a) for a in c.atoms]}


def cube_from_json(d: dict) -> Cube:
    return Cube.make([atom_from_json(a) for a in d["atoms"]], d["mode"])


# --------------------------------------------------------------------------
# entailment


class _Budget:
    def __init__(self, limit: int):
        self.left = limit

    def tick(self):
        self.left -= 1
        if self.left < 0:
            raise EntailmentBudgetExceeded("entailment case-split budget exceeded")


def _refute(atoms: list[Atom], qs: list[tuple[Atom, ...]], budget: _Budget) -> bool:
    """True iff ``atoms`` together with the negation of every cube in ``qs`` is unsat."""
    budget.tick()
    if find_point(atoms) is None:
        return True
    if not qs:
        return False
    head, rest = qs[0], qs[1:]
    for a in head:
        for n in a.negations():
            if not _refute(atoms + [n], rest, budget):
                return False
    return True


def _cube_entails(c: Cube, qs: Sequence[Cube], limit: int = ENTAIL_LIMIT) -> bool:
    if c.mode == ABSENT:
        return (_cube_entails(Cube(c.atoms, INF), qs, limit)
                and _cube_entails(Cube(c.atoms, FINITE), qs, limit))
    relevant = [q.atoms for q in qs if q.mode in (ABSENT, c.mode)]
    # cubes whose atoms are all syntactically present are trivially implied
    have = set(c.atoms)
    if any(all(a in have for a in q) for q in relevant):
        return True
    relevant.sort(key=len)
    return _refute(list(c.atoms), relevant, _Budget(limit))


def entails(p: Predicate, q: Predicate, limit: int = ENTAIL_LIMIT) -> bool:
    """Every rational point of ``p`` lies in ``q``."""
    return all(_cube_entails(c, q.cubes, limit) for c in p.cubes)


def equivalent(p: Predicate, q: Predicate) -> bool:
    return p == q or (entails(p, q) and entails(q, p))


# --------------------------------------------------------------------------
# strongest postcondition

_fresh = count()


def _post_cube(c: Cube, st: Statement) -> Cube | None:
    if st.kind == ASSUME:
        if c.mode == INF and ORANK in st.variables:
            # with oldrnk = inf, c*oldrnk + t <= 0 holds iff c < 0
            kept = []
            for a in st.atoms:
                k = a.term.coeff(ORANK)
                if k == 0:
                    kept.append(a)
                elif a.rel != LE or k > 0:
                    return None
            return c.conjoin(kept)
        return c.conjoin(st.atoms)
    if st.kind == HAVOC:
        return eliminate(c, st.lhs)
    assert st.kind == ASSIGN
    v, e = st.lhs, st.rhs
    if v == ORANK:
        atoms = project_out(c.atoms, [ORANK]) if c.mode == FINITE else list(c.atoms)
        return Cube.make(atoms + [Atom.eq(LinearTerm.var(ORANK), e)], FINITE)
    if v not in e.variables:
        base = project_out(c.atoms, [v])
        return Cube.make(base + [Atom.eq(LinearTerm.var(v), e)], c.mode)
    old = f"{v}#{next(_fresh)}"
    ren = {v: old}
    atoms = [a.rename(ren) for a in c.atoms]
    atoms.append(Atom.eq(LinearTerm.var(v), e.rename(ren)))
    return Cube.make(project_out(atoms, [old]), c.mode)


def _split_mode(c: Cube) -> list[Cube]:
    if c.mode != ABSENT:
        return [c]
    return [Cube(c.atoms, INF), Cube(c.atoms, FINITE)]


def strongest_post(p: Predicate, st: Statement | Sequence[Statement]) -> Predicate:
    stmts = [st] if isinstance(st, Statement) else list(st)
    for s in stmts:
        cubes = p.cubes
        if s.kind == ASSUME and ORANK in s.variables:
            cubes = [d for c in cubes for d in _split_mode(c)]
        p = Predicate.make(_post_cube(c, s) for c in cubes)
    return p


def hoare_valid(pre: Predicate, st: Statement | Sequence[Statement], post: Predicate) -> bool:
    return entails(strongest_post(pre, st), post)


def evaluate(p: Predicate, nu: Mapping[str, object]) -> bool:
    return any(c.evaluate(nu) for c in p.cubes)
