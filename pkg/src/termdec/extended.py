"""Generalising a certified lasso module into an on-the-fly automaton.

Locations with equal predicates are merged, and any transition whose Hoare
triple is valid under the certificate may be added.  Transitions are only
decided when an automaton operation asks for them, and the answers are
memoised.
"""

from __future__ import annotations

import logging
from typing import Iterable

from .automata import Automaton, Module, to_dot
from .certifier import CertifiedModule
from .logic import INF, Predicate, PredicateTooComplex, entails, equivalent, strongest_post
from .program import Program, Statement, rank_update

log = logging.getLogger(__name__)


def _inf_only(p: Predicate) -> bool:
    return bool(p.cubes) and all(c.mode == INF for c in p.cubes)


class ExtendedModule(Automaton):
    """Lazy Büchi view of a certified module closed under both modification rules.

    States are integers indexing :attr:`predicates`.  The state of the fair
    location is never merged with anything.  States whose predicate only
    allows ``oldrnk = inf`` form the part before the first fair visit; no
    transition leads back into that part from the rest, which keeps the
    initial state unreachable from the final one.
    """

    def __init__(self, cm: CertifiedModule, alphabet: Iterable[Statement],
                 rule2: bool = True, narrow: bool = True):
        self.cm = cm
        self.rule2 = rule2
        self.narrow = narrow
        self.alphabet = tuple(sorted(set(alphabet), key=str))
        prog = cm.module.program
        fin = cm.module.final
        order = prog.reachable()
        self.predicates: list[Predicate] = []
        self.loc_state: dict[str, int] = {}
        for loc in order:
            pred = cm.cert[loc]
            if loc != fin:
                hit = self._find(pred)
                if hit is not None:
                    self.loc_state[loc] = hit
                    continue
            self.loc_state[loc] = len(self.predicates)
            self.predicates.append(pred)
        self.final = self.loc_state[fin]
        self.initial = self.loc_state[prog.initial]
        self.states = list(range(len(self.predicates)))
        self.pre = [_inf_only(p) for p in self.predicates]
        self.seeds = {(self.loc_state[s], st, self.loc_state[d]) for s, st, d in prog.edges}
        self._memo: dict = {}
        self._triples: dict = {}
        self._posts: dict = {}
        self._entail: dict = {}
        self.undecided = 0

    def _find(self, pred: Predicate) -> int | None:
        fin = self.loc_state.get(self.cm.module.final)
        cands = [k for k in range(len(self.predicates)) if k != fin]
        for k in cands:
            if self.predicates[k] == pred:
                return k
        for k in cands:
            try:
                if equivalent(self.predicates[k], pred):
                    return k
            except PredicateTooComplex:
                continue
        return None

    @property
    def semi_deterministic(self) -> bool:
        """Whether the post-fair part is deterministic in the automaton view."""
        if not self.narrow:
            return False
        seen = set()
        for s, a, _ in self.seeds:
            if not self.pre[s]:
                if (s, a) in seen:
                    return False
                seen.add((s, a))
        return not self.pre[self.final]

    @property
    def rank(self):
        return self.cm.rank

    def __len__(self) -> int:
        return len(self.predicates)

    def has_transition(self, src: int, st: Statement, dst: int) -> bool:
        if (src, st, dst) in self.seeds:
            return True
        if not self.rule2 or (not self.pre[src] and self.pre[dst]):
            return False
        key = (src, st.id, dst)
        hit = self._triples.get(key)
        if hit is not None:
            return hit
        stmts = [rank_update(self.cm.rank.term), st] if src == self.final else [st]
        try:
            post = self._post(src, st, stmts)
            # a vacuous triple is only followed into a false state
            target = self.predicates[dst]
            ok = entails(post, target) and (not post.is_false() or target.is_false())
        except PredicateTooComplex as e:
            log.warning("treating %s -[%s]-> %s as absent: %s", src, st, dst, e)
            self.undecided += 1
            ok = False
        self._triples[key] = ok
        return ok

    def _post(self, src: int, st: Statement, stmts) -> Predicate:
        key = (src, st.id)
        hit = self._posts.get(key)
        if hit is None:
            hit = strongest_post(self.predicates[src], stmts)
            self._posts[key] = hit
        return hit

    # automaton interface

    def initial_states(self) -> list:
        return [self.initial]

    def successors(self, q, a) -> list:
        key = (q, a)
        hit = self._memo.get(key)
        if hit is None:
            hit = self._select(q, a)
            self._memo[key] = hit
        return hit

    def _select(self, q: int, a: Statement) -> list[int]:
        """Seed targets plus at most one rule-2 target in each part.

        Following every admitted transition makes the automaton highly
        nondeterministic and its complement large.  Among the admitted
        targets of one part we follow the one with the strongest predicate,
        since a stronger source admits more outgoing transitions.
        """
        seeds = [d for d in self.states if (q, a, d) in self.seeds]
        if not self.rule2 or not self.narrow:
            extra = [d for d in self.states if d not in seeds and self.has_transition(q, a, d)]
            return sorted(seeds + extra)
        out = list(seeds)
        for part in (True, False):
            if any(self.pre[d] == part for d in seeds):
                continue
            cands = [d for d in self.states if self.pre[d] == part and self.has_transition(q, a, d)]
            if cands:
                out.append(max(cands, key=lambda d: (self._strength(d, cands),
                                                     d == self.final, -d)))
        return sorted(out)

    def _strength(self, d: int, cands: list[int]) -> int:
        return sum(1 for e in cands if e != d and self._implies(d, e))

    def _implies(self, d: int, e: int) -> bool:
        key = (d, e)
        hit = self._entail.get(key)
        if hit is None:
            try:
                hit = entails(self.predicates[d], self.predicates[e])
            except PredicateTooComplex:
                hit = False
            self._entail[key] = hit
        return hit

    def is_accepting(self, q) -> bool:
        return q == self.final

    def materialize(self) -> CertifiedModule:
        """Explicit certified module with every admitted transition."""
        names = [f"q{k}" for k in self.states]
        edges = [(names[s], a, names[d]) for s in self.states for a in self.alphabet
                 for d in self.successors(s, a)]
        prog = Program.build(names[self.initial], edges, names)
        cert = {names[k]: self.predicates[k] for k in self.states}
        return CertifiedModule(Module(prog, names[self.final]), self.cm.rank, cert,
                               self.cm.trivial, self.cm.lasso)

    def to_dot(self, name: str = "module") -> str:
        labels = {k: str(p) for k, p in enumerate(self.predicates)}
        return to_dot(self, name, labels)


def merge_locations(cm: CertifiedModule, alphabet: Iterable[Statement] | None = None,
                    rule2: bool = True) -> ExtendedModule:
    if alphabet is None:
        alphabet = cm.module.program.alphabet
    return ExtendedModule(cm, alphabet, rule2)
