"""Parsers for the ``.wprog`` while-language and the ``.cfg`` edge-list format.

``.wprog``::

    program sort(int i);
    while (i > 0) {
      int j := 1;
      while (j < i) { j++; }
      i--;
    }

Statements: ``v := e;``, ``v++;``, ``v--;``, ``int v;`` (havoc), ``int v := e;``,
``havoc v;``, ``assume(c);``, ``skip;``, ``while(c){...}``,
``if(c){...} [else {...}]``.  Conditions combine linear comparisons with
``&&``, ``||``, ``!``; ``true``, ``false`` and ``*`` (nondeterministic) are
also allowed.

``.cfg``::

    init l0;
    l0 -> l1 : assume i >= 1;
    l1 -> l0 : i := i - 1;
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import product

from .linear import EQ, LE, ORANK, Atom, LinearTerm
from .program import Program, Statement


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.line, self.col = line, col


_TOKEN = re.compile(r"""
    (?P<ws>\s+|//[^\n]*|\#[^\n]*|/\*.*?\*/)
  | (?P<num>\d+)
  | (?P<id>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>:=|\+\+|--|<=|>=|==|!=|&&|\|\||->|[-+*<>=!(){};,:])
""", re.VERBOSE | re.DOTALL)

KEYWORDS = {"program", "int", "while", "if", "else", "havoc", "assume", "skip",
            "true", "false", "init", "loc"}


@dataclass
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(src: str) -> list[Tok]:
    toks: list[Tok] = []
    pos, line, lstart = 0, 1, 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m:
            raise ParseError(f"unexpected character {src[pos]!r}", line, pos - lstart + 1)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            toks.append(Tok(kind, text, line, pos - lstart + 1))
        nl = text.count("\n")
        if nl:
            line += nl
            lstart = pos + text.rindex("\n") + 1
        pos = m.end()
    toks.append(Tok("eof", "", line, pos - lstart + 1))
    return toks


class _Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0

    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def error(self, msg: str) -> ParseError:
        return ParseError(msg, self.tok.line, self.tok.col)

    def at(self, *texts: str) -> bool:
        return self.tok.kind != "eof" and self.tok.text in texts

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Tok:
        if not self.at(text):
            raise self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return t

    def ident(self) -> str:
        t = self.tok
        if t.kind != "id" or t.text in KEYWORDS:
            raise self.error(f"expected identifier, found {t.text or 'end of input'!r}")
        if t.text == ORANK:
            raise self.error(f"{ORANK!r} is reserved")
        self.i += 1
        return t.text

    # -- linear expressions -------------------------------------------------

    def expr(self) -> LinearTerm:
        if self.accept("-"):
            acc = -self.term()
        else:
            self.accept("+")
            acc = self.term()
        while self.at("+", "-"):
            op = self.tok.text
            self.i += 1
            t = self.term()
            acc = acc + t if op == "+" else acc - t
        return acc

    def term(self) -> LinearTerm:
        acc = self.factor()
        while self.at("*"):
            t0 = self.tok
            self.i += 1
            rhs = self.factor()
            if acc.is_constant():
                acc = rhs * acc.const
            elif rhs.is_constant():
                acc = acc * rhs.const
            else:
                raise ParseError("nonlinear expression", t0.line, t0.col)
        return acc

    def factor(self) -> LinearTerm:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return LinearTerm.constant(int(t.text))
        if self.accept("-"):
            return -self.factor()
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        return LinearTerm.var(self.ident())

    def comparison(self):
        lhs = self.expr()
        if not self.at("<", "<=", ">", ">=", "==", "!=", "="):
            raise self.error("expected comparison operator")
        op = self.tok.text
        self.i += 1
        return ("cmp", "==" if op == "=" else op, lhs, self.expr())

    # -- conditions ---------------------------------------------------------

    def cond(self):
        parts = [self.conj()]
        while self.accept("||"):
            parts.append(self.conj())
        return parts[0] if len(parts) == 1 else ("or", parts)

    def conj(self):
        parts = [self.lit()]
        while self.accept("&&"):
            parts.append(self.lit())
        return parts[0] if len(parts) == 1 else ("and", parts)

    def lit(self):
        if self.accept("!"):
            return ("not", self.lit())
        if self.accept("true"):
            return ("true",)
        if self.accept("false"):
            return ("false",)
        if self.accept("*"):
            return ("nondet",)
        if self.at("("):
            save = self.i
            try:
                return self.comparison()
            except ParseError:
                self.i = save
            self.expect("(")
            c = self.cond()
            self.expect(")")
            return c
        return self.comparison()


_NEG = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": "!=", "!=": "=="}


def _cmp_dnf(op: str, l: LinearTerm, r: LinearTerm) -> list[list[Atom]]:
    # strict comparisons are tightened: over the integers a < b iff a - b + 1 <= 0
    if op == "<":
        return [[Atom.make(l - r + 1, LE)]]
    if op == "<=":
        return [[Atom.make(l - r, LE)]]
    if op == ">":
        return [[Atom.make(r - l + 1, LE)]]
    if op == ">=":
        return [[Atom.make(r - l, LE)]]
    if op == "==":
        return [[Atom.make(l - r, EQ)]]
    return _cmp_dnf("<", l, r) + _cmp_dnf(">", l, r)


def to_dnf(c, negate: bool = False) -> list[list[Atom]]:
    """Condition AST to a list of conjunctions; trivially false ones are dropped."""
    kind = c[0]
    if kind == "true":
        out = [] if negate else [[]]
    elif kind == "false":
        out = [[]] if negate else []
    elif kind == "nondet":
        out = [[]]
    elif kind == "not":
        out = to_dnf(c[1], not negate)
    elif kind in ("and", "or"):
        subs = [to_dnf(x, negate) for x in c[1]]
        if (kind == "and") != negate:
            out = [sum(combo, []) for combo in product(*subs)]
        else:
            out = [conj for sub in subs for conj in sub]
    else:
        _, op, l, r = c
        out = _cmp_dnf(_NEG[op] if negate else op, l, r)
    result = []
    for conj in out:
        vals = [a.trivial_value() for a in conj]
        if False in vals:
            continue
        conj = [a for a, v in zip(conj, vals) if v is None]
        if conj not in result:
            result.append(conj)
    return result


# --------------------------------------------------------------------------
# while-language


class _Lowering:
    def __init__(self):
        self.n = 0
        self.edges: list[tuple[str, Statement, str]] = []

    def fresh(self) -> str:
        self.n += 1
        return f"n{self.n}"

    def merge(self, old: str, new: str) -> None:
        if old == new:
            return
        self.edges = [(new if s == old else s, st, new if d == old else d)
                      for s, st, d in self.edges]

    def guard(self, src: str, c, dst: str, negate: bool = False) -> None:
        for conj in to_dnf(c, negate):
            self.edges.append((src, Statement.assume(conj), dst))


class _WhileParser(_Parser):
    def __init__(self, src: str):
        super().__init__(src)
        self.low = _Lowering()

    def program(self) -> Program:
        if self.accept("program"):
            self.ident()
            self.expect("(")
            if not self.at(")"):
                self.param()
                while self.accept(","):
                    self.param()
            self.expect(")")
            self.accept(";")
        init = self.low.fresh()
        if self.at("{"):
            exit_ = self.block(init)
        else:
            exit_ = init
            while self.tok.kind != "eof":
                exit_ = self.stmt(exit_)
        if self.tok.kind != "eof":
            raise self.error("trailing input after program body")
        del exit_
        return Program.build(init, self.low.edges).trimmed()

    def param(self) -> None:
        self.expect("int")
        self.ident()

    def block(self, entry: str) -> str:
        self.expect("{")
        cur = entry
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("unterminated block")
            cur = self.stmt(cur)
        self.expect("}")
        return cur

    def _edge(self, entry: str, st: Statement) -> str:
        nxt = self.low.fresh()
        self.low.edges.append((entry, st, nxt))
        return nxt

    def stmt(self, entry: str) -> str:
        low = self.low
        if self.at("{"):
            return self.block(entry)
        if self.accept("skip"):
            self.expect(";")
            return entry
        if self.accept("havoc"):
            v = self.ident()
            self.expect(";")
            return self._edge(entry, Statement.havoc(v))
        if self.accept("int"):
            cur = entry
            while True:
                v = self.ident()
                if self.accept(":=") or self.accept("="):
                    cur = self._edge(cur, Statement.assign(v, self.expr()))
                else:
                    cur = self._edge(cur, Statement.havoc(v))
                if not self.accept(","):
                    break
            self.expect(";")
            return cur
        if self.accept("assume"):
            c = self.cond()
            self.expect(";")
            nxt = low.fresh()
            low.guard(entry, c, nxt)
            return nxt
        if self.accept("while"):
            self.expect("(")
            c = self.cond()
            self.expect(")")
            body = low.fresh()
            low.guard(entry, c, body)
            end = self.block(body) if self.at("{") else self.stmt(body)
            low.merge(end, entry)
            exit_ = low.fresh()
            low.guard(entry, c, exit_, negate=True)
            return exit_
        if self.accept("if"):
            self.expect("(")
            c = self.cond()
            self.expect(")")
            t_in, e_in = low.fresh(), low.fresh()
            low.guard(entry, c, t_in)
            low.guard(entry, c, e_in, negate=True)
            t_out = self.block(t_in) if self.at("{") else self.stmt(t_in)
            e_out = e_in
            if self.accept("else"):
                e_out = self.block(e_in) if self.at("{") else self.stmt(e_in)
            low.merge(e_out, t_out)
            return t_out
        v = self.ident()
        if self.accept("++"):
            rhs = LinearTerm.var(v) + 1
        elif self.accept("--"):
            rhs = LinearTerm.var(v) - 1
        else:
            if not (self.accept(":=") or self.accept("=")):
                raise self.error("expected ':=', '++' or '--'")
            rhs = self.expr()
        self.expect(";")
        return self._edge(entry, Statement.assign(v, rhs))


def parse_while_program(source: str) -> Program:
    """Parse a ``.wprog`` source into a trimmed control-flow graph.

    Locations on no infinite path (such as the exit of the outermost loop) are
    removed, since they carry no ω-traces.
    """
    return _WhileParser(source).program()


# --------------------------------------------------------------------------
# edge-list format


class _CfgParser(_Parser):
    def statement(self) -> Statement:
        if self.accept("assume"):
            if self.accept("true"):
                return Statement.assume(())
            atoms = []
            while True:
                _, op, l, r = self.comparison()
                if op == "!=":
                    raise self.error("'!=' is not allowed in a .cfg assume")
                (conj,) = _cmp_dnf(op, l, r)
                atoms.extend(conj)
                if not self.accept("&&"):
                    break
            if any(a.trivial_value() is False for a in atoms):
                raise self.error("assume with a constant-false atom")
            return Statement.assume(a for a in atoms if a.trivial_value() is None)
        if self.accept("havoc"):
            return Statement.havoc(self.ident())
        v = self.ident()
        self.expect(":=")
        return Statement.assign(v, self.expr())

    def parse(self) -> Program:
        init = None
        declared: list[str] = []
        edges = []
        while self.tok.kind != "eof":
            if self.accept("init"):
                if init is not None:
                    raise self.error("duplicate init")
                init = self.ident()
                self.expect(";")
            elif self.accept("loc"):
                declared.append(self.ident())
                while self.accept(","):
                    declared.append(self.ident())
                self.expect(";")
            else:
                src = self.ident()
                self.expect("->")
                dst = self.ident()
                self.expect(":")
                try:
                    st = self.statement()
                except ParseError as e:
                    raise ParseError(f"malformed statement: {e}", e.line, e.col) from None
                self.expect(";")
                edges.append((src, st, dst))
        if init is None:
            raise ParseError("missing 'init <loc>;'")
        if declared:
            known = set(declared) | {init}
            for s, _, d in edges:
                for l in (s, d):
                    if l not in known:
                        raise ParseError(f"undeclared location {l!r}")
        return Program.build(init, edges, declared)


def parse_cfg(source: str) -> Program:
    return _CfgParser(source).parse()


def render_cfg(p: Program) -> str:
    lines = [f"init {p.initial};"]
    on_edges = {p.initial} | {s for s, _, _ in p.edges} | {d for _, _, d in p.edges}
    isolated = [l for l in p.locations if l not in on_edges]
    if isolated:
        lines.append("loc " + ", ".join(isolated) + ";")
    for s, st, d in p.edges:
        lines.append(f"{s} -> {d} : {st};")
    return "\n".join(lines) + "\n"


def parse_program(source: str, fmt: str) -> Program:
    if fmt == "cfg":
        return parse_cfg(source)
    if fmt == "wprog":
        return parse_while_program(source)
    raise ValueError(f"unknown format {fmt!r}")
