"""Independent oracles and generators shared by the unit and acceptance tests.

Nothing here calls Fourier-Motzkin or the emptiness/membership code under
test: rational satisfiability goes through the simplex solver with a slack
for strict atoms, automata questions through networkx graph algorithms.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

import networkx as nx

from termdec.automata import Buchi
from termdec.linear import EQ, LE, LT, Atom, LinearTerm
from termdec.simplex import solve

BOX = range(-6, 7)


def random_atom(rng: random.Random, vs, max_coeff=3, max_const=6, rels=(LE, LE, LE, EQ)) -> Atom:
    while True:
        coeffs = {v: rng.randint(-max_coeff, max_coeff) for v in vs if rng.random() < 0.7}
        if any(coeffs.values()):
            break
    return Atom.make(LinearTerm.of(coeffs, rng.randint(-max_const, max_const)), rng.choice(rels))


def random_atoms(rng: random.Random, vs, n=None, **kw) -> list[Atom]:
    n = rng.randint(1, 4) if n is None else n
    return [random_atom(rng, vs, **kw) for _ in range(n)]


def box_points(vs, box=BOX):
    for vals in itertools.product(box, repeat=len(vs)):
        yield dict(zip(vs, vals))


def holds_all(atoms, nu) -> bool:
    return all(a.holds(nu) for a in atoms)


def rational_point(atoms) -> dict | None:
    """Exact rational witness of a conjunction (strict atoms allowed), via simplex.

    Strict atoms ``t < 0`` become ``t + s <= 0`` with a shared slack
    ``0 <= s <= 1`` that is maximised; the system is satisfiable iff the
    optimum has ``s > 0``.
    """
    s = "__slack"
    rows = []
    for a in atoms:
        if a.rel == LT:
            rows.append(Atom(a.term + LinearTerm.var(s), LE))
        else:
            rows.append(a)
    rows += [Atom.make(LinearTerm.var(s) - 1, LE), Atom.make(-LinearTerm.var(s), LE)]
    sol = solve(rows, -LinearTerm.var(s))
    if sol is None:
        return None
    if any(a.rel == LT for a in atoms) and sol[s] <= 0:
        return None
    point = {v: x for v, x in sol.items() if v != s}
    for a in atoms:
        for v in a.variables:
            point.setdefault(v, Fraction(0))
    assert holds_all(atoms, point)
    return point


def non_entailment_witness(premise, conclusion_cubes) -> dict | None:
    """A rational point of ``premise`` violating every conclusion cube, if one exists."""
    choices = [[n for a in cube for n in a.negations()] for cube in conclusion_cubes]
    for pick in itertools.product(*choices):
        pt = rational_point(list(premise) + list(pick))
        if pt is not None:
            return pt
    return None


# automata


def random_buchi(rng: random.Random, n: int, letters: int, density: float) -> Buchi:
    """``density`` is the fraction of (state, letter) pairs with a transition."""
    sigma = [f"a{k}" for k in range(letters)]
    trans = []
    for s in range(n):
        for a in sigma:
            if rng.random() < density:
                trans.append((s, a, rng.randrange(n)))
                if rng.random() < 0.3:
                    trans.append((s, a, rng.randrange(n)))
    acc = [q for q in range(n) if rng.random() < 0.4]
    return Buchi.build(range(n), sigma, trans, [0], acc)


def graph_of(b: Buchi) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(b.states)
    for s, _, d in b.transitions:
        g.add_edge(s, d)
    return g


def scc_nonempty(b: Buchi) -> bool:
    """Language non-empty iff a reachable accepting state lies on a cycle."""
    g = graph_of(b)
    reach = set()
    for q in b.initial:
        reach |= {q} | nx.descendants(g, q)
    for comp in nx.strongly_connected_components(g.subgraph(reach)):
        cyclic = len(comp) > 1 or any(g.has_edge(q, q) for q in comp)
        if cyclic and any(b.is_accepting(q) for q in comp):
            return True
    return False


def accepts_lasso(a, stem, loop) -> bool:
    """Whether automaton ``a`` accepts ``stem loop^ω``, by SCC analysis of a product graph."""
    word = list(stem) + list(loop)
    n, k = len(stem), len(loop)
    nxt = lambda i: i + 1 if i + 1 < n + k else n
    g = nx.DiGraph()
    todo = [(q, 0) for q in a.initial_states()]
    seen = set(todo)
    g.add_nodes_from(todo)
    while todo:
        q, i = todo.pop()
        for q2 in a.successors(q, word[i]):
            node = (q2, nxt(i))
            g.add_edge((q, i), node)
            if node not in seen:
                seen.add(node)
                todo.append(node)
    for comp in nx.strongly_connected_components(g):
        q0 = next(iter(comp))
        cyclic = len(comp) > 1 or g.has_edge(q0, q0)
        if cyclic and any(a.is_accepting(q) for q, _ in comp):
            return True
    return False


def all_lassos(alphabet, max_stem: int, max_loop: int):
    sigma = sorted(alphabet, key=str)
    for m in range(max_stem + 1):
        for u in itertools.product(sigma, repeat=m):
            for l in range(1, max_loop + 1):
                for v in itertools.product(sigma, repeat=l):
                    yield u, v


# the Fourier-Motzkin / entailment corpus


def fm_case(rng: random.Random) -> tuple[list[str], list[str]]:
    """One generated case: (soundness failures, whitelisted relaxation gaps).

    Checks satisfiability, projection of one variable and entailment
    against brute force over the integer box.  A gap is an answer that is
    only wrong over the integers and is confirmed by an exact rational
    witness.
    """
    from termdec.logic import Predicate, entails, find_point, project_out

    k = rng.randint(1, 3)
    vs = ["x", "y", "z"][:k]
    atoms = random_atoms(rng, vs)
    fails, gaps = [], []
    pts = [nu for nu in box_points(vs) if holds_all(atoms, nu)]

    pt = find_point(atoms)
    if pt is None:
        if pts:
            fails.append(f"unsat claimed but {pts[0]} satisfies {list(map(str, atoms))}")
        if rational_point(atoms) is not None:
            fails.append(f"unsat claimed but a rational point exists for {list(map(str, atoms))}")
    else:
        full = {v: pt.get(v, Fraction(0)) for v in vs}
        if not holds_all(atoms, full):
            fails.append(f"returned point {pt} violates {list(map(str, atoms))}")

    v = rng.choice(vs)
    rest = [w for w in vs if w != v]
    proj = project_out(atoms, [v])
    wide = range(-50, 51)
    for nu in box_points(rest):
        has_int = any(holds_all(atoms, {**nu, v: x}) for x in wide)
        claimed = holds_all(proj, nu)
        if has_int and not claimed:
            fails.append(f"projection of {v} lost {nu}")
        elif claimed and not has_int:
            fixed = [Atom(_fix(a.term, nu), a.rel) for a in atoms]
            if rational_point(fixed) is None:
                fails.append(f"projection of {v} admits {nu} without any witness")
            else:
                gaps.append(f"projection {nu}")

    q_cubes = [random_atoms(rng, vs, rng.randint(1, 2)) for _ in range(rng.randint(1, 2))]
    ent = entails(Predicate.of(atoms), Predicate.make([_cube(c) for c in q_cubes]))
    counter = next((nu for nu in pts if not any(holds_all(c, nu) for c in q_cubes)), None)
    if ent and counter is not None:
        fails.append(f"entailment claimed but {counter} is a counterexample")
    if not ent and counter is None:
        if non_entailment_witness(atoms, q_cubes) is None:
            fails.append("entailment denied without any rational counterexample")
        else:
            gaps.append("entailment")
    return fails, gaps


def _fix(t: LinearTerm, nu) -> LinearTerm:
    for v, x in nu.items():
        t = t.substitute(v, LinearTerm.constant(x))
    return t


def _cube(atoms):
    from termdec.logic import Cube
    return Cube.make(atoms)


# concrete execution


def execute(st, nu: dict, rng: random.Random, havoc_range=(-20, 20)) -> dict | None:
    """Successor valuation of ``st``, or ``None`` when an assume blocks."""
    from termdec.program import ASSIGN, ASSUME

    if st.kind == ASSUME:
        return dict(nu) if holds_all(st.atoms, _with_zeros(nu, st.atoms)) else None
    out = dict(nu)
    if st.kind == ASSIGN:
        out[st.lhs] = st.rhs.evaluate({v: nu.get(v, 0) for v in st.rhs.variables})
    else:
        out[st.lhs] = rng.randint(*havoc_range)
    return out


def _with_zeros(nu, atoms):
    full = dict(nu)
    for a in atoms:
        for v in a.variables:
            full.setdefault(v, 0)
    return full


def stmt(text: str):
    """A single statement in edge-list syntax, such as ``x := x - 1``."""
    from termdec.frontend import parse_cfg
    return parse_cfg(f"init a; a -> b : {text};").edges[0][1]


def lasso(stem: str, loop: str):
    """Lasso from ``;``-separated statement texts."""
    from termdec.automata import LassoTrace
    split = lambda s: tuple(stmt(x.strip()) for x in s.split(";") if x.strip())
    return LassoTrace(split(stem), split(loop))


def check_ranking_by_execution(t, f, inv, rng, runs=200, box=(-20, 20)) -> list[str]:
    """Run the loop from random states satisfying ``inv`` after the stem.

    Every completed iteration must start with f >= 0 and decrease f by at
    least one, and must re-establish ``inv``.
    """
    out = []
    vs = sorted(frozenset().union(*(s.variables for s in t.stem + t.loop)))
    for _ in range(runs):
        nu = {v: rng.randint(*box) for v in vs}
        for s in t.stem:
            nu = execute(s, nu, rng) if nu is not None else None
        if nu is None:
            continue
        for _ in range(10):
            if not holds_all(inv.atoms, _with_zeros(nu, inv.atoms)):
                out.append(f"invariant fails at {nu}")
                break
            before = f(nu)
            cur = nu
            for s in t.loop:
                cur = execute(s, cur, rng) if cur is not None else None
            if cur is None:
                break
            if before < 0 or f(cur) > before - 1:
                out.append(f"no decrease from {nu} to {cur}")
                break
            nu = cur
    return out


# certificates


OLD_VALUES = [float("inf")] + list(range(-2, 10))


def certificate_counterexample(cm, box=range(-6, 7), rng=None) -> str | None:
    """A concrete state refuting one certificate condition, searched over a box."""
    import math

    from termdec.linear import ORANK
    from termdec.logic import evaluate
    from termdec.program import rank_update

    rng = rng or random.Random(0)
    p, fin, f = cm.module.program, cm.module.final, cm.rank.term
    vs = sorted(set(p.variables) | set(f.variables))
    after, todo = {fin}, [fin]
    while todo:
        for _, d in p.successors(todo.pop()):
            if d not in after:
                after.add(d)
                todo.append(d)
    if p.initial in after:
        return "initial location reachable from the final one"
    out_edges = {l: [(st, d) for st, d in p.successors(l)] for l in p.locations}
    lo, hi = box.start, box.stop - 1
    for nu in box_points(vs, box):
        fval = f.evaluate(nu)
        for old in OLD_VALUES:
            s = {**nu, ORANK: old}
            holds = {l: evaluate(cm.cert[l], s) for l in p.locations}
            if holds[p.initial] != (old == math.inf):
                return f"initial predicate differs from oldrnk = inf at {s}"
            if holds[fin] and not (old == math.inf or (old >= 0 and fval <= old - 1)):
                return f"final predicate admits {s} where f = {fval} is not below oldrnk"
            for src in p.locations:
                if not holds[src]:
                    continue
                for st, dst in out_edges[src]:
                    cur = s
                    for x in ([rank_update(f), st] if src == fin else [st]):
                        cur = execute(x, cur, rng, (lo, hi)) if cur is not None else None
                    if cur is not None and not evaluate(cm.cert[dst], cur):
                        return f"edge {src} -[{st}]-> {dst} leaves the annotation from {s}"
    return None


def simulate_module(cm, rng: random.Random, steps=40, box=(-20, 20)) -> tuple[list[str], int]:
    """One random execution of a module; returns (violations, fair visits).

    At each step an enabled edge is chosen uniformly.  Between consecutive
    visits of the final location the ranking value must be non-negative
    before and strictly smaller after.
    """
    p, fin, f = cm.module.program, cm.module.final, cm.rank.term
    vs = sorted(set(p.variables) | set(f.variables))
    nu = {v: rng.randint(*box) for v in vs}
    loc, last, visits, out = p.initial, None, 0, []
    for _ in range(steps):
        if loc == fin:
            val = f.evaluate(nu)
            if last is not None and not (last >= 0 and val < last):
                out.append(f"f went from {last} to {val}")
            last, visits = val, visits + 1
        moves = []
        for st, dst in p.successors(loc):
            nxt = execute(st, nu, rng, box)
            if nxt is not None:
                moves.append((nxt, dst))
        if not moves:
            break
        nu, loc = rng.choice(moves)
    return out, visits


def mutate(cm, rng: random.Random):
    """One random single edit of a certified module: (kind, mutated module).

    Kinds: weaken the final predicate, drop an atom somewhere, retarget an edge.
    """
    from dataclasses import replace

    from termdec.logic import FINITE, INF, TRUE, Cube, Predicate

    p = cm.module.program
    kind = rng.choice(["weaken-final", "drop-atom", "retarget"])
    if kind == "retarget" and p.edges:
        k = rng.randrange(len(p.edges))
        s, st, d = p.edges[k]
        d2 = rng.choice([l for l in p.locations if l != d] or [d])
        edges = list(p.edges[:k]) + [(s, st, d2)] + list(p.edges[k + 1:])
        prog = type(p).build(p.initial, edges, p.locations)
        return kind, replace(cm, module=replace(cm.module, program=prog))
    loc = cm.module.final if kind == "weaken-final" else rng.choice(p.locations)
    pred = cm.cert[loc]
    cubes = list(pred.cubes)
    if not cubes:
        return kind, replace(cm, cert={**cm.cert, loc: TRUE})
    i = rng.randrange(len(cubes))
    c = cubes[i]
    if c.atoms:
        atoms = list(c.atoms)
        atoms.pop(rng.randrange(len(atoms)))
        cubes[i] = Cube.make(atoms, c.mode)
    else:
        cubes[i] = Cube.make([], FINITE if c.mode == INF else INF)
    return kind, replace(cm, cert={**cm.cert, loc: Predicate.make(cubes)})
