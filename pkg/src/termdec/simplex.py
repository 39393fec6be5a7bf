"""Dense two-phase simplex over ``Fraction`` with Bland's rule.

Used to solve the Farkas systems of ranking-function synthesis.  Variables
are free (sign-unrestricted) unless constrained by an atom.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence

from .linear import EQ, LE, Atom, LinearTerm

ZERO = Fraction(0)


class Unbounded(Exception):
    pass


def _pivot(rows: list[list[Fraction]], obj: list[Fraction], r: int, c: int) -> None:
    pr = rows[r]
    inv = 1 / pr[c]
    pr[:] = [x * inv for x in pr]
    for k, row in enumerate(rows):
        if k != r and row[c] != 0:
            f = row[c]
            row[:] = [x - f * y for x, y in zip(row, pr)]
    if obj[c] != 0:
        f = obj[c]
        obj[:] = [x - f * y for x, y in zip(obj, pr)]


def _run(rows, obj, basis, allowed: int) -> None:
    """Minimise: ``obj`` holds reduced costs, last entry is -value."""
    while True:
        col = next((j for j in range(allowed) if obj[j] < 0), None)
        if col is None:
            return
        best = None
        for i, row in enumerate(rows):
            if row[col] > 0:
                ratio = row[-1] / row[col]
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            raise Unbounded()
        r = best[1]
        _pivot(rows, obj, r, col)
        basis[r] = col


def solve(constraints: Sequence[Atom], objective: LinearTerm | None = None,
          nonneg: Sequence[str] = ()) -> dict[str, Fraction] | None:
    """Feasible point (minimising ``objective`` if given) or ``None`` if infeasible.

    ``nonneg`` names variables known to be non-negative; they are not split,
    which keeps Farkas multiplier systems small.  Raises :class:`Unbounded`
    when the objective has no minimum.
    """
    names = sorted(set().union(*(a.variables for a in constraints),
                                objective.variables if objective else set()))
    nn = set(nonneg)
    cols: dict[str, list[tuple[int, int]]] = {}
    ncol = 0
    for v in names:
        if v in nn:
            cols[v] = [(ncol, 1)]
            ncol += 1
        else:
            cols[v] = [(ncol, 1), (ncol + 1, -1)]
            ncol += 2
    n_slack = sum(1 for a in constraints if a.rel == LE)
    nrows = len(constraints)
    width = ncol + n_slack + nrows + 1
    rows: list[list[Fraction]] = []
    slack = ncol
    for k, a in enumerate(constraints):
        if a.rel not in (LE, EQ):
            raise ValueError("strict constraints are not supported")
        row = [ZERO] * width
        for v, c in a.term.coeffs:
            for j, sign in cols[v]:
                row[j] += c * sign
        if a.rel == LE:
            row[slack] = Fraction(1)
            slack += 1
        row[-1] = -a.term.const
        if row[-1] < 0:
            row = [-x for x in row]
        row[ncol + n_slack + k] = Fraction(1)
        rows.append(row)
    basis = [ncol + n_slack + k for k in range(nrows)]
    art0 = ncol + n_slack
    # phase 1: minimise the sum of artificials
    obj = [ZERO] * width
    for row in rows:
        for j in range(width):
            if j < art0 or j == width - 1:
                obj[j] -= row[j]
    _run(rows, obj, basis, art0)
    if obj[-1] != 0:
        return None
    # drive degenerate artificials out of the basis
    for i in range(len(rows)):
        if basis[i] >= art0:
            col = next((j for j in range(art0) if rows[i][j] != 0), None)
            if col is not None:
                _pivot(rows, [ZERO] * width, i, col)
                basis[i] = col
    if objective is not None:
        obj = [ZERO] * width
        for v, c in objective.coeffs:
            for j, sign in cols[v]:
                obj[j] += c * sign
        for i, b in enumerate(basis):
            if b < width - 1 and obj[b] != 0:
                f = obj[b]
                obj[:] = [x - f * y for x, y in zip(obj, rows[i])]
        _run(rows, obj, basis, art0)
    value = [ZERO] * width
    for i, b in enumerate(basis):
        value[b] = rows[i][-1]
    return {v: sum((value[j] * s for j, s in cols[v]), ZERO) for v in names}


def lp_feasible(constraints: Sequence[Atom]) -> dict[str, Fraction] | None:
    return solve(constraints)


def check_point(constraints: Sequence[Atom], point: Mapping[str, Fraction]) -> bool:
    full = dict(point)
    for a in constraints:
        for v in a.variables:
            full.setdefault(v, ZERO)
    return all(a.holds(full) for a in constraints)
