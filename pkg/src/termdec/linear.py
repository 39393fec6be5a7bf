"""Exact affine terms over named variables and the linear atoms built from them."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Mapping, Union

Number = Union[int, Fraction]

#: Auxiliary variable recording the ranking value at the previous fair visit.
ORANK = "oldrnk"

LE, EQ, LT = "<=", "==", "<"


@dataclass(frozen=True, order=True)
class LinearTerm:
    """``sum(c * v for v, c in coeffs) + const`` with rational coefficients.

    Zero coefficients are never stored and ``coeffs`` is sorted by variable
    name, so structural equality is semantic equality.
    """

    coeffs: tuple[tuple[str, Fraction], ...] = ()
    const: Fraction = Fraction(0)

    @staticmethod
    def of(coeffs: Mapping[str, Number] | Iterable[tuple[str, Number]] = (),
           const: Number = 0) -> LinearTerm:
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        acc: dict[str, Fraction] = {}
        for v, c in items:
            acc[v] = acc.get(v, Fraction(0)) + Fraction(c)
        return LinearTerm(tuple(sorted((v, c) for v, c in acc.items() if c != 0)),
                          Fraction(const))

    @staticmethod
    def var(name: str, coeff: Number = 1) -> LinearTerm:
        return LinearTerm.of({name: coeff})

    @staticmethod
    def constant(c: Number) -> LinearTerm:
        return LinearTerm((), Fraction(c))

    def as_dict(self) -> dict[str, Fraction]:
        return dict(self.coeffs)

    def coeff(self, v: str) -> Fraction:
        for name, c in self.coeffs:
            if name == v:
                return c
        return Fraction(0)

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.coeffs)

    def is_constant(self) -> bool:
        return not self.coeffs

    def __add__(self, other: LinearTerm | Number) -> LinearTerm:
        if not isinstance(other, LinearTerm):
            return LinearTerm(self.coeffs, self.const + Fraction(other))
        return LinearTerm.of(list(self.coeffs) + list(other.coeffs), self.const + other.const)

    __radd__ = __add__

    def __neg__(self) -> LinearTerm:
        return LinearTerm(tuple((v, -c) for v, c in self.coeffs), -self.const)

    def __sub__(self, other: LinearTerm | Number) -> LinearTerm:
        return self + (-other)

    def __rsub__(self, other: Number) -> LinearTerm:
        return (-self) + other

    def __mul__(self, k: Number) -> LinearTerm:
        k = Fraction(k)
        if k == 0:
            return LinearTerm()
        return LinearTerm(tuple((v, c * k) for v, c in self.coeffs), self.const * k)

    __rmul__ = __mul__

    def substitute(self, v: str, term: LinearTerm) -> LinearTerm:
        c = self.coeff(v)
        if c == 0:
            return self
        rest = LinearTerm(tuple(p for p in self.coeffs if p[0] != v), self.const)
        return rest + term * c

    def rename(self, mapping: Mapping[str, str]) -> LinearTerm:
        return LinearTerm.of([(mapping.get(v, v), c) for v, c in self.coeffs], self.const)

    def evaluate(self, valuation: Mapping[str, Number]) -> Fraction:
        return sum((c * valuation[v] for v, c in self.coeffs), self.const)

    def scale_to_integers(self) -> LinearTerm:
        """Positive multiple of ``self`` with coprime integer coefficients."""
        nums = [c for _, c in self.coeffs] + [self.const]
        den = lcm(*(x.denominator for x in nums))
        ints = [int(x * den) for x in nums]
        g = 0
        for x in ints:
            g = gcd(g, x)
        if g == 0:
            return self
        return self * Fraction(den, g)

    def __str__(self) -> str:
        parts: list[str] = []
        for v, c in self.coeffs:
            parts.append(_signed(c, v, first=not parts))
        if self.const != 0 or not parts:
            parts.append(_signed(self.const, "", first=not parts))
        return " ".join(parts)


def _fmt(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _signed(c: Fraction, v: str, first: bool) -> str:
    neg = c < 0
    mag = -c if neg else c
    if v:
        body = v if mag == 1 else f"{_fmt(mag)}*{v}"
    else:
        body = _fmt(mag)
    if first:
        return f"-{body}" if neg else body
    return f"- {body}" if neg else f"+ {body}"


@dataclass(frozen=True, order=True)
class Atom:
    """``term <rel> 0`` where ``rel`` is ``<=``, ``==`` or (internally) ``<``.

    Build atoms through :meth:`make` to get the normal form: coprime integer
    coefficients, and a positive leading coefficient for equalities.
    """

    term: LinearTerm
    rel: str = LE

    @staticmethod
    def make(term: LinearTerm, rel: str = LE) -> Atom:
        t = term.scale_to_integers()
        if rel == EQ and t.coeffs and t.coeffs[0][1] < 0:
            t = -t
        return Atom(t, rel)

    @staticmethod
    def le(lhs: LinearTerm, rhs: LinearTerm | Number = 0) -> Atom:
        return Atom.make(lhs - rhs, LE)

    @staticmethod
    def ge(lhs: LinearTerm, rhs: LinearTerm | Number = 0) -> Atom:
        return Atom.make(rhs - lhs if isinstance(rhs, LinearTerm) else -lhs + rhs, LE)

    @staticmethod
    def eq(lhs: LinearTerm, rhs: LinearTerm | Number = 0) -> Atom:
        return Atom.make(lhs - rhs, EQ)

    @property
    def variables(self) -> frozenset[str]:
        return self.term.variables

    def trivial_value(self) -> bool | None:
        """Truth value if the atom has no variables, else ``None``."""
        if not self.term.is_constant():
            return None
        c = self.term.const
        return {LE: c <= 0, EQ: c == 0, LT: c < 0}[self.rel]

    def holds(self, valuation: Mapping[str, Number]) -> bool:
        x = self.term.evaluate(valuation)
        return {LE: x <= 0, EQ: x == 0, LT: x < 0}[self.rel]

    def negations(self) -> list[Atom]:
        """Disjuncts of the rational negation (strict where needed)."""
        if self.rel == LE:
            return [Atom.make(-self.term, LT)]
        if self.rel == LT:
            return [Atom.make(-self.term, LE)]
        return [Atom.make(self.term, LT), Atom.make(-self.term, LT)]

    def substitute(self, v: str, term: LinearTerm) -> Atom:
        return Atom.make(self.term.substitute(v, term), self.rel)

    def rename(self, mapping: Mapping[str, str]) -> Atom:
        return Atom.make(self.term.rename(mapping), self.rel)

    def __str__(self) -> str:
        lhs = LinearTerm(self.term.coeffs)
        rhs = -self.term.const
        rel = self.rel
        if lhs.coeffs and all(c < 0 for _, c in lhs.coeffs) and rel != EQ:
            lhs, rhs = -lhs, -rhs
            rel = {LE: ">=", LT: ">"}[rel]
        return f"{lhs} {rel} {_fmt(rhs)}"
