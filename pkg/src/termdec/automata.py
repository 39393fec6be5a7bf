"""Büchi automata over the statement alphabet.

Automata expose a small lazy interface (``alphabet``, ``initial_states()``,
``successors(q, a)``, ``is_accepting(q)``) so that products, complements and
the on-the-fly extended modules compose without materialising each other.
Successor lists are returned in a deterministic order; letters are ordered
by their string form.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

from .program import Program


class StateBudgetExceeded(Exception):
    """Complementation or exploration created more states than allowed."""


class ModuleError(ValueError):
    """A module violates the initial/final location partition."""


def letter_key(a) -> str:
    return str(a)


class Automaton:
    alphabet: tuple

    def initial_states(self) -> list:
        raise NotImplementedError

    def successors(self, q, a) -> list:
        raise NotImplementedError

    def is_accepting(self, q) -> bool:
        raise NotImplementedError


@dataclass(frozen=True)
class Buchi(Automaton):
    states: tuple
    alphabet: tuple
    transitions: tuple          # (src, letter, dst) triples
    initial: tuple
    accepting: frozenset
    _delta: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        sigma = set(self.alphabet)
        delta: dict = {}
        for s, a, d in self.transitions:
            if a not in sigma:
                raise ValueError(f"letter {a} not in alphabet")
            delta.setdefault((s, a), []).append(d)
        object.__setattr__(self, "_delta", delta)

    @staticmethod
    def build(states: Iterable, alphabet: Iterable, transitions: Iterable,
              initial: Iterable, accepting: Iterable) -> Buchi:
        states = list(dict.fromkeys(states))
        order = {q: k for k, q in enumerate(states)}
        trans = sorted(set(transitions),
                       key=lambda t: (order[t[0]], letter_key(t[1]), order[t[2]]))
        return Buchi(tuple(states), tuple(sorted(set(alphabet), key=letter_key)),
                     tuple(trans), tuple(dict.fromkeys(initial)), frozenset(accepting))

    def initial_states(self) -> list:
        return list(self.initial)

    def successors(self, q, a) -> list:
        return self._delta.get((q, a), [])

    def is_accepting(self, q) -> bool:
        return q in self.accepting


def universal(alphabet: Iterable) -> Buchi:
    alphabet = list(alphabet)
    return Buchi.build([0], alphabet, [(0, a, 0) for a in alphabet], [0], [0])


def empty_automaton(alphabet: Iterable) -> Buchi:
    return Buchi.build([0], alphabet, [], [0], [])


# --------------------------------------------------------------------------
# lassos


def _primitive_root(v: tuple) -> tuple:
    n = len(v)
    for p in range(1, n + 1):
        if n % p == 0 and v[:p] * (n // p) == v:
            return v[:p]
    return v


@dataclass(frozen=True)
class LassoTrace:
    """The ultimately periodic word ``stem . loop^ω``."""

    stem: tuple
    loop: tuple

    def __post_init__(self):
        if not self.loop:
            raise ValueError("lasso loop must be non-empty")
        object.__setattr__(self, "stem", tuple(self.stem))
        object.__setattr__(self, "loop", tuple(self.loop))

    def normal_form(self) -> LassoTrace:
        """Canonical representative of the ω-word: primitive loop, shortest stem."""
        stem, loop = list(self.stem), list(_primitive_root(self.loop))
        while stem and stem[-1] == loop[-1]:
            stem.pop()
            loop = [loop[-1]] + loop[:-1]
        return LassoTrace(tuple(stem), tuple(loop))

    def same_word(self, other: LassoTrace) -> bool:
        return self.normal_form() == other.normal_form()

    def with_stem(self) -> LassoTrace:
        """Same word with a non-empty stem (the first loop letter is peeled off)."""
        if self.stem:
            return self
        return LassoTrace(self.loop[:1], self.loop[1:] + self.loop[:1])

    def unrolled(self, k: int = 2) -> LassoTrace:
        return LassoTrace(self.stem, self.loop * k)

    def prefix(self, n: int) -> tuple:
        out = list(self.stem[:n])
        while len(out) < n:
            out.extend(self.loop)
        return tuple(out[:n])

    def __str__(self) -> str:
        u = " ".join(f"[{a}]" for a in self.stem) or "ε"
        v = " ".join(f"[{a}]" for a in self.loop)
        return f"{u} ({v})^ω"


# --------------------------------------------------------------------------
# programs and modules


@dataclass(frozen=True)
class Module:
    """A program with one distinguished fair location.

    A well-formed module has no location reachable from the fair location
    that is also the initial location, so the locations split into a part
    before and a part after the first fair visit.  Use :meth:`validate`.
    """

    program: Program
    final: str

    def __post_init__(self):
        if self.final not in self.program.locations:
            raise ModuleError(f"final location {self.final!r} is not a location")

    def partition_violation(self) -> str | None:
        after = set(self.program.reachable(self.final))
        if self.program.initial in after:
            return "initial location is reachable from the final location"
        return None

    def validate(self) -> Module:
        msg = self.partition_violation()
        if msg:
            raise ModuleError(msg)
        return self


def program_to_buchi(p: Program) -> Buchi:
    return Buchi.build(p.locations, p.alphabet, p.edges, [p.initial], p.locations)


def module_to_buchi(m: Module, alphabet: Iterable | None = None) -> Buchi:
    p = m.program
    sigma = set(p.alphabet) if alphabet is None else set(alphabet) | set(p.alphabet)
    return Buchi.build(p.locations, sigma, p.edges, [p.initial], [m.final])


# --------------------------------------------------------------------------
# products


class Intersection(Automaton):
    """Two-phase product: wait for an ``a``-accepting state, then a ``b``-accepting one."""

    def __init__(self, a: Automaton, b: Automaton):
        if set(a.alphabet) != set(b.alphabet):
            raise ValueError("alphabet mismatch")
        self.a, self.b = a, b
        self.alphabet = a.alphabet

    def initial_states(self) -> list:
        return [(s, t, 1) for s in self.a.initial_states() for t in self.b.initial_states()]

    def successors(self, q, x) -> list:
        s, t, phase = q
        if phase == 1 and self.a.is_accepting(s):
            phase = 2
        elif phase == 2 and self.b.is_accepting(t):
            phase = 1
        return [(s2, t2, phase) for s2 in self.a.successors(s, x)
                for t2 in self.b.successors(t, x)]

    def is_accepting(self, q) -> bool:
        return q[2] == 2 and self.b.is_accepting(q[1])


def intersect(a: Automaton, b: Automaton) -> Intersection:
    return Intersection(a, b)


class MultiIntersection(Automaton):
    """Product of ``base`` with several automata, degeneralised by a counter."""

    def __init__(self, base: Automaton, others: Sequence[Automaton]):
        for o in others:
            if set(o.alphabet) != set(base.alphabet):
                raise ValueError("alphabet mismatch")
        self.parts = [base, *others]
        self.alphabet = base.alphabet

    def initial_states(self) -> list:
        combos = [()]
        for part in self.parts:
            combos = [c + (q,) for c in combos for q in part.initial_states()]
        return [(c, 0) for c in combos]

    def successors(self, q, x) -> list:
        comps, k = q
        if self.parts[k].is_accepting(comps[k]):
            k = (k + 1) % len(self.parts)
        combos = [()]
        for part, c in zip(self.parts, comps):
            nxt = part.successors(c, x)
            if not nxt:
                return []
            combos = [p + (n,) for p in combos for n in nxt]
        return [(c, k) for c in combos]

    def is_accepting(self, q) -> bool:
        comps, k = q
        return k == 0 and self.parts[0].is_accepting(comps[0])


# --------------------------------------------------------------------------
# rank-based complementation


class Complement(Automaton):
    """Lazy level-ranking complement, by default with maximum rank ``2m``.

    Here ``m`` is the number of non-accepting states.  The bound holds
    because every odd removal round of a rejecting run DAG deletes an
    infinite path of non-accepting vertices, so after ``m`` rounds only
    finitely many vertices can remain.

    A macro-state is ``(ranking, obligations)`` where ``ranking`` maps the
    current subset of input states to ranks (even on accepting states) and
    ``obligations`` holds the even-ranked states still owing a visit to an
    odd rank.  A macro-state is accepting when it has no obligations.

    Among successors with the same subset and obligation set only the
    pointwise-largest ranking is kept: it can mimic every move of a smaller
    one, so the language is unchanged.
    """

    def __init__(self, a: Automaton, states: Sequence | None = None,
                 budget: int | None = None, max_rank: int | None = None):
        self.a = a
        self.alphabet = a.alphabet
        states = list(getattr(a, "states", None) if states is None else states)
        self.index = {q: k for k, q in enumerate(states)}
        self.states_of = states
        if max_rank is None:
            max_rank = 2 * sum(1 for q in states if not a.is_accepting(q))
        self.max_rank = max_rank
        self.budget = budget
        self._memo: dict = {}
        # macro-states are interned; the automaton's states are their indices
        self._ids: dict = {}
        self._macros: list = []

    @property
    def size(self) -> int:
        return len(self._macros)

    def macro(self, q: int) -> tuple:
        """The ``(ranking, obligations)`` pair behind state ``q``."""
        return self._macros[q]

    def _register(self, m) -> int:
        q = self._ids.get(m)
        if q is None:
            q = self._ids[m] = len(self._macros)
            self._macros.append(m)
            if self.budget is not None and len(self._macros) > self.budget:
                raise StateBudgetExceeded(f"complement exceeded {self.budget} states")
        return q

    def initial_states(self) -> list:
        top = self.max_rank
        ranking = []
        for k in sorted({self.index[q] for q in self.a.initial_states()}):
            acc = self.a.is_accepting(self.states_of[k])
            ranking.append((k, top - (top % 2) if acc else top))
        return [self._register((tuple(ranking), frozenset()))]

    def is_accepting(self, q) -> bool:
        return not self._macros[q][1]

    def successors(self, q, x) -> list:
        key = (q, x)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        ranking, obligations = self._macros[q]
        bound: dict[int, int] = {}
        owed: set[int] = set()
        for k, r in ranking:
            for t in self.a.successors(self.states_of[k], x):
                j = self.index[t]
                bound[j] = min(bound.get(j, r), r)
                if k in obligations:
                    owed.add(j)
        for j in bound:
            if self.a.is_accepting(self.states_of[j]) and bound[j] % 2:
                bound[j] -= 1
        cands = sorted(bound) if not obligations else sorted(owed)
        fixed = {j: bound[j] for j in bound if j not in cands}
        choices = []
        for j in cands:
            b = bound[j]
            even = b if b % 2 == 0 else b - 1
            opts = [(even, True)]
            odd = b if b % 2 else b - 1
            if odd >= 1 and not self.a.is_accepting(self.states_of[j]):
                opts.append((odd, False))
            choices.append(opts)
        out = []
        combos = [((), ())]
        for j, opts in zip(cands, choices):
            combos = [(rs + ((j, r),), ob + ((j,) if is_even else ()))
                      for rs, ob in combos for r, is_even in opts]
        for rs, ob in combos:
            ranking2 = tuple(sorted(list(fixed.items()) + list(rs)))
            out.append(self._register((ranking2, frozenset(ob))))
        self._memo[key] = out
        return out


def complement(a: Automaton, budget: int | None = None,
               max_rank: int | None = None) -> Complement:
    """Rank-based complement; ``max_rank`` defaults to twice the number of non-accepting states.

    For a semi-deterministic automaton (accepting states only in a
    deterministic part that is closed under successors) ``max_rank=3``
    already yields the exact complement.
    """
    return Complement(a, budget=budget, max_rank=max_rank)


def is_semi_deterministic(a: Automaton, max_states: int | None = None) -> bool:
    """Every state reachable from an accepting state has at most one successor per letter."""
    order, adj, _ = _explore(a, max_states)
    todo = [q for q in order if a.is_accepting(q)]
    seen = set(todo)
    while todo:
        q = todo.pop()
        letters = [x for x, _ in adj[q]]
        if len(letters) != len(set(letters)):
            return False
        for _, q2 in adj[q]:
            if q2 not in seen:
                seen.add(q2)
                todo.append(q2)
    return True


def difference(p: Automaton, ms: Sequence[Automaton], budget: int | None = None) -> Automaton:
    """Automaton for ``L(p)`` minus the union of the ``L(m)``."""
    if not ms:
        return p
    return MultiIntersection(p, [complement(m, budget) for m in ms])


# --------------------------------------------------------------------------
# exploration, emptiness, membership


class Timeout(StateBudgetExceeded):
    """Exploration passed its wall-clock deadline."""


def _explore(a: Automaton, max_states: int | None = None, deadline: float | None = None):
    """Breadth-first reachable graph: (order, adjacency, parent)."""
    order: list = []
    adj: dict = {}
    parent: dict = {}
    queue = deque()
    for q in a.initial_states():
        if q not in parent:
            parent[q] = None
            order.append(q)
            queue.append(q)
    letters = sorted(a.alphabet, key=letter_key)
    while queue:
        if deadline is not None and time.monotonic() > deadline:
            raise Timeout("deadline passed during exploration")
        q = queue.popleft()
        out = []
        for x in letters:
            for q2 in a.successors(q, x):
                out.append((x, q2))
                if q2 not in parent:
                    parent[q2] = (q, x)
                    order.append(q2)
                    queue.append(q2)
                    if max_states is not None and len(order) > max_states:
                        raise StateBudgetExceeded(f"exploration exceeded {max_states} states")
        adj[q] = out
    return order, adj, parent


def _sccs(order: list, adj: dict) -> dict:
    """Tarjan's algorithm (iterative); maps node to component id."""
    index: dict = {}
    low: dict = {}
    comp: dict = {}
    stack: list = []
    on: set = set()
    counter = 0
    ncomp = 0
    for root in order:
        if root in index:
            continue
        work = [(root, iter(adj[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for _, w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on.add(w)
                    work.append((w, iter(adj[w])))
                    advanced = True
                    break
                if w in on:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on.discard(w)
                    comp[w] = ncomp
                    if w == v:
                        break
                ncomp += 1
    return comp


def _nontrivial(v, comp, adj) -> bool:
    c = comp[v]
    return any(comp[w] == c for _, w in adj[v])


def is_empty(a: Automaton, max_states: int | None = None,
             deadline: float | None = None) -> LassoTrace | None:
    """``None`` if ``L(a)`` is empty, else a short accepted lasso.

    The stem is a shortest (then lexicographically least) path to an
    accepting state on a cycle; the loop is a shortest cycle through it.
    Among accepting states, the one minimising stem plus loop length wins.
    """
    order, adj, parent = _explore(a, max_states, deadline)
    comp = _sccs(order, adj)
    depth = {}
    for q in order:
        p = parent[q]
        depth[q] = 0 if p is None else depth[p[0]] + 1
    best = None
    for q in order:
        if best is not None and depth[q] >= best[0]:
            break
        if not a.is_accepting(q) or not _nontrivial(q, comp, adj):
            continue
        cyc = _shortest_cycle(q, adj, comp)
        total = depth[q] + len(cyc)
        if best is None or total < best[0]:
            best = (total, q, cyc)
    if best is None:
        return None
    _, q, cyc = best
    stem = []
    while parent[q] is not None:
        q, x = parent[q]
        stem.append(x)
    stem.reverse()
    return LassoTrace(tuple(stem), tuple(cyc))


def _shortest_cycle(q, adj, comp) -> list:
    c = comp[q]
    prev = {}
    queue = deque([q])
    while queue:
        v = queue.popleft()
        for x, w in adj[v]:
            if comp[w] != c:
                continue
            if w == q:
                path = [x]
                while v != q:
                    v, y = prev[v]
                    path.append(y)
                return path[::-1]
            if w not in prev:
                prev[w] = (v, x)
                queue.append(w)
    raise AssertionError("state is not on a cycle")


def lasso_member(a: Automaton, t: LassoTrace) -> bool:
    """Whether ``stem . loop^ω`` is accepted, via the product with the lasso's shape."""
    word = t.stem + t.loop
    n, k = len(word), len(t.stem)
    ids: dict = {}
    nodes: list = []
    succ: list[list[int]] = []

    def node(q, p) -> int:
        key = (q, p)
        i = ids.get(key)
        if i is None:
            i = ids[key] = len(nodes)
            nodes.append(key)
            succ.append(None)
        return i

    for q in a.initial_states():
        node(q, 0)
    i = 0
    while i < len(nodes):
        q, p = nodes[i]
        nxt = p + 1 if p + 1 < n else k
        succ[i] = [node(q2, nxt) for q2 in a.successors(q, word[p])]
        i += 1
    comp = _int_sccs(succ)
    return any(a.is_accepting(nodes[v][0]) and any(comp[w] == comp[v] for w in succ[v])
               for v in range(len(nodes)))


def _int_sccs(succ: list[list[int]]) -> list[int]:
    """Tarjan's algorithm on an integer graph; returns the component of each node."""
    n = len(succ)
    index = [-1] * n
    low = [0] * n
    comp = [-1] * n
    on = [False] * n
    stack: list[int] = []
    counter = ncomp = 0
    for root in range(n):
        if index[root] >= 0:
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on[root] = True
        work = [(root, 0)]
        while work:
            v, j = work[-1]
            out = succ[v]
            while j < len(out):
                w = out[j]
                j += 1
                if index[w] < 0:
                    work[-1] = (v, j)
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on[w] = True
                    work.append((w, 0))
                    break
                if on[w] and index[w] < low[v]:
                    low[v] = index[w]
            else:
                work.pop()
                if work:
                    u = work[-1][0]
                    if low[v] < low[u]:
                        low[u] = low[v]
                if low[v] == index[v]:
                    while True:
                        w = stack.pop()
                        on[w] = False
                        comp[w] = ncomp
                        if w == v:
                            break
                    ncomp += 1
    return comp


def trim(a: Automaton, max_states: int | None = None,
         deadline: float | None = None) -> Buchi:
    """Explicit copy keeping only states from which an accepting cycle is reachable.

    States are renumbered ``0, 1, ...`` in breadth-first order.  The language
    is unchanged.
    """
    order, adj, _ = _explore(a, max_states, deadline)
    comp = _sccs(order, adj)
    live = {v for v in order if a.is_accepting(v) and _nontrivial(v, comp, adj)}
    live_comps = {comp[v] for v in live}
    live = {v for v in order if comp[v] in live_comps}
    pred: dict = {}
    for v in order:
        for _, w in adj[v]:
            pred.setdefault(w, []).append(v)
    stack = list(live)
    while stack:
        w = stack.pop()
        for v in pred.get(w, ()):
            if v not in live:
                live.add(v)
                stack.append(v)
    if not live:
        return empty_automaton(a.alphabet)
    keep = [v for v in order if v in live]
    num = {v: k for k, v in enumerate(keep)}
    trans = [(num[v], x, num[w]) for v in keep for x, w in adj[v] if w in live]
    return Buchi.build(range(len(keep)), a.alphabet, trans,
                       [num[q] for q in a.initial_states() if q in live],
                       [num[v] for v in keep if a.is_accepting(v)])


def quotient(b: Buchi) -> Buchi:
    """Merge bisimilar states (same acceptance, same successor blocks per letter).

    Bisimilar states accept the same suffixes, so the language is unchanged.
    Blocks are numbered by their first state in ``b.states`` order.
    """
    succ: dict = {q: [] for q in b.states}
    for s_, x, d in b.transitions:
        succ[s_].append((x, d))
    block = {q: int(b.is_accepting(q)) for q in b.states}
    count = len(set(block.values()))
    while True:
        sigs: dict = {}
        new = {}
        for q in b.states:
            sig = (block[q], frozenset((x, block[d]) for x, d in succ[q]))
            new[q] = sigs.setdefault(sig, len(sigs))
        block = new
        if len(sigs) == count:
            break
        count = len(sigs)
    first: dict = {}
    for q in b.states:
        first.setdefault(block[q], len(first))
    rep = {q: first[block[q]] for q in b.states}
    trans = {(rep[s_], x, rep[d]) for s_, x, d in b.transitions}
    return Buchi.build(sorted(set(rep.values())), b.alphabet, trans,
                       [rep[q] for q in b.initial], [rep[q] for q in b.accepting])


def materialize(a: Automaton, max_states: int | None = None) -> Buchi:
    order, adj, _ = _explore(a, max_states)
    trans = [(q, x, q2) for q in order for x, q2 in adj[q]]
    return Buchi.build(order, a.alphabet, trans, a.initial_states(),
                       [q for q in order if a.is_accepting(q)])


# --------------------------------------------------------------------------
# rendering


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(a: Automaton, name: str = "A", labels: dict | None = None,
           max_states: int | None = 10_000) -> str:
    """DOT text; accepting states are drawn as double circles."""
    b = a if isinstance(a, Buchi) else materialize(a, max_states)
    ids = {q: f"q{k}" for k, q in enumerate(b.states)}
    lines = [f'digraph "{_dot_escape(name)}" {{', "  rankdir=LR;",
             '  __start [shape=point, label=""];']
    for q in b.states:
        shape = "doublecircle" if b.is_accepting(q) else "circle"
        text = labels.get(q, str(q)) if labels else str(q)
        lines.append(f'  {ids[q]} [shape={shape}, label="{_dot_escape(text)}"];')
    for q in b.initial:
        lines.append(f"  __start -> {ids[q]};")
    for s, x, d in b.transitions:
        lines.append(f'  {ids[s]} -> {ids[d]} [label="{_dot_escape(str(x))}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def render_automaton(a: Automaton, max_states: int | None = 10_000) -> str:
    """Edge-list text in the ``.cfg`` syntax, with accepting states as a comment."""
    b = a if isinstance(a, Buchi) else materialize(a, max_states)
    names = {q: f"q{k}" for k, q in enumerate(b.states)}
    lines = [f"init {names[q]};" for q in b.initial[:1]]
    acc = [names[q] for q in b.states if b.is_accepting(q)]
    lines.append("# accepting: " + ", ".join(acc))
    for s, x, d in b.transitions:
        lines.append(f"{names[s]} -> {names[d]} : {x};")
    return "\n".join(lines) + "\n"
