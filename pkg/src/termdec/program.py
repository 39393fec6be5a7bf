"""Statements (alphabet letters) and programs as labeled control-flow graphs."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .linear import ORANK, Atom, LinearTerm

ASSUME, ASSIGN, HAVOC = "assume", "assign", "havoc"


@dataclass(frozen=True)
class Statement:
    """One letter of the statement alphabet.

    ``assume`` carries a conjunction of atoms, ``assign`` a target and an
    affine right-hand side, ``havoc`` a target only.  Two statements are the
    same letter iff their :attr:`id` strings are equal.
    """

    kind: str
    atoms: tuple[Atom, ...] = ()
    lhs: str | None = None
    rhs: LinearTerm | None = None

    @staticmethod
    def assume(atoms: Iterable[Atom]) -> Statement:
        uniq = sorted(set(atoms), key=str)
        return intern(Statement(ASSUME, tuple(uniq)))

    @staticmethod
    def assign(lhs: str, rhs: LinearTerm) -> Statement:
        return intern(Statement(ASSIGN, lhs=lhs, rhs=rhs))

    @staticmethod
    def havoc(v: str) -> Statement:
        return intern(Statement(HAVOC, lhs=v))

    @property
    def id(self) -> str:
        return str(self)

    @property
    def variables(self) -> frozenset[str]:
        if self.kind == ASSUME:
            return frozenset().union(*(a.variables for a in self.atoms))
        vs = {self.lhs}
        if self.rhs is not None:
            vs |= self.rhs.variables
        return frozenset(vs)

    def rename(self, mapping: Mapping[str, str]) -> Statement:
        if self.kind == ASSUME:
            return Statement(ASSUME, tuple(a.rename(mapping) for a in self.atoms))
        lhs = mapping.get(self.lhs, self.lhs)
        if self.kind == ASSIGN:
            return Statement(ASSIGN, lhs=lhs, rhs=self.rhs.rename(mapping))
        return Statement(HAVOC, lhs=lhs)

    def __str__(self) -> str:
        if self.kind == ASSUME:
            if not self.atoms:
                return "assume true"
            return "assume " + " && ".join(str(a) for a in self.atoms)
        if self.kind == ASSIGN:
            return f"{self.lhs} := {self.rhs}"
        return f"havoc {self.lhs}"

    def __repr__(self) -> str:
        return f"<{self}>"

    def __lt__(self, other: Statement) -> bool:
        return self.id < other.id

    def __hash__(self) -> int:
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.kind, self.atoms, self.lhs, self.rhs))
            object.__setattr__(self, "_hash", h)
        return h


_INTERNED: dict[Statement, Statement] = {}


def intern(st: Statement) -> Statement:
    """Canonical instance for ``st``; equal statements share one object."""
    return _INTERNED.setdefault(st, st)


def rank_update(f: LinearTerm) -> Statement:
    """The auxiliary ``oldrnk := f`` statement; never part of a program alphabet."""
    return Statement(ASSIGN, lhs=ORANK, rhs=f)


Edge = tuple[str, Statement, str]


@dataclass(frozen=True)
class Program:
    locations: tuple[str, ...]
    edges: tuple[Edge, ...]
    initial: str
    _succ: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        locs = set(self.locations)
        if self.initial not in locs:
            raise ValueError(f"initial location {self.initial!r} not among locations")
        succ: dict[str, list[tuple[Statement, str]]] = {l: [] for l in self.locations}
        for src, st, dst in self.edges:
            if src not in locs or dst not in locs:
                raise ValueError(f"edge endpoint not a location: {src} -> {dst}")
            succ[src].append((st, dst))
        for l in succ:
            succ[l].sort(key=lambda p: (p[0].id, p[1]))
        object.__setattr__(self, "_succ", succ)

    @staticmethod
    def build(initial: str, edges: Iterable[Edge], locations: Iterable[str] = ()) -> Program:
        edges = sorted(set(edges), key=lambda e: (e[0], e[1].id, e[2]))
        locs = {initial, *locations}
        for s, _, d in edges:
            locs.update((s, d))
        return Program(tuple(sorted(locs)), tuple(edges), initial)

    @property
    def alphabet(self) -> frozenset[Statement]:
        return frozenset(st for _, st, _ in self.edges)

    @property
    def variables(self) -> frozenset[str]:
        return frozenset().union(*(st.variables for _, st, _ in self.edges))

    def successors(self, loc: str) -> list[tuple[Statement, str]]:
        return self._succ[loc]

    def reachable(self, start: str | None = None) -> list[str]:
        start = self.initial if start is None else start
        seen = {start}
        order = [start]
        queue = deque([start])
        while queue:
            l = queue.popleft()
            for _, d in self._succ[l]:
                if d not in seen:
                    seen.add(d)
                    order.append(d)
                    queue.append(d)
        return order

    def trimmed(self) -> Program:
        """Drop locations that lie on no infinite path from the initial location.

        The set of ω-traces is unchanged.  Locations are renamed ``l0, l1, ...``
        in breadth-first order; the initial location is always kept.
        """
        reach = set(self.reachable())
        live = set(reach)
        changed = True
        while changed:
            changed = False
            for l in list(live):
                if not any(d in live for _, d in self._succ[l]):
                    live.discard(l)
                    changed = True
        keep = live | {self.initial}
        edges = [(s, st, d) for s, st, d in self.edges if s in live and d in live]
        pruned = Program.build(self.initial, edges, keep)
        names = {l: f"l{i}" for i, l in enumerate(pruned.reachable())}
        return pruned.relabel(names)

    def relabel(self, names: Mapping[str, str]) -> Program:
        return Program.build(
            names[self.initial],
            [(names[s], st, names[d]) for s, st, d in self.edges],
            [names[l] for l in self.locations],
        )


def assume_true() -> Statement:
    return Statement.assume(())

