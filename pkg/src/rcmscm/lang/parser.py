"""Recursive-descent parser for the counterfactual formula language.

Concrete syntax (see ``docs/grammar.md`` for the EBNF)::

    X[Z=0]=1 -> X[Z=1]=1            base formula
    P(Y[X=1]=1 & Y[X=0]=0)          probability term
    P(!(X[Z=0]=1 -> X[Z=1]=1)) = 0  comparison of terms

Ratios are sugar: ``t1 = t2 / t3`` is read as ``t1 * t3 = t2``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from ..core import STAR, OutcomeKey, valuation
from .ast import Arith, Atom, Bin, Compare, Lit, Neg, Not, Prob, is_base, is_lformula

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<star><star>)
  | (?P<op><->|->|>=|<=|[><=!&|+\-*/()\[\],])
  | (?P<num>\d+(?:\.\d+|/\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.']*)
    """,
    re.VERBOSE,
)


class FormulaSyntaxError(ValueError):
    def __init__(self, text: str, pos: int, expected: set[str], found: str):
        self.text, self.pos, self.expected, self.found = text, pos, set(expected), found
        exp = ", ".join(sorted(self.expected))
        super().__init__(f"at position {pos}: expected one of {{{exp}}}, found {found}")


@dataclass(frozen=True)
class Token:
    kind: str  # op, num, ident, star, eof
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    out, pos = [], 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise FormulaSyntaxError(text, pos, {"token"}, repr(text[pos]))
        kind = m.lastgroup
        if kind != "ws":
            out.append(Token(kind, m.group(), pos))
        pos = m.end()
    out.append(Token("eof", "", len(text)))
    return out


class _Backtrack(Exception):
    pass


class Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0
        self._far: FormulaSyntaxError | None = None
        self._no_cmp: set[int] = set()  # positions where a comparison cannot start

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def fail(self, *expected: str):
        t = self.tok
        err = FormulaSyntaxError(self.text, t.pos, set(expected), repr(t.text) if t.kind != "eof" else "end of input")
        if self._far is None or err.pos > self._far.pos:
            self._far = err
        elif err.pos == self._far.pos:
            self._far.expected |= err.expected
        raise _Backtrack()

    def at(self, text: str) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    def eat(self, text: str) -> Token:
        if not self.at(text):
            self.fail(repr(text))
        t = self.tok
        self.i += 1
        return t

    def _starts_term(self) -> bool:
        t = self.tok
        if t.kind == "num":
            return True
        if t.kind == "op" and t.text in ("-", "("):
            return True
        return t.kind == "ident" and t.text == "P" and self.peek().text == "("

    # -- entry points
    def parse(self):
        try:
            node = self._top()
        except _Backtrack:
            raise self._far from None
        return node

    def _top(self):
        if self._starts_term():
            save = self.i
            try:
                term = self.term()
                if self.tok.kind == "eof":
                    return term
            except _Backtrack:
                pass
            self.i = save
        node = self.bool_expr()
        if self.tok.kind != "eof":
            self.fail("end of input", "'&'", "'|'", "'->'", "'<->'")
        if not (is_base(node) or is_lformula(node)):
            raise FormulaSyntaxError(self.text, 0, {"homogeneous formula"}, "atoms mixed with comparisons")
        return node

    # -- boolean layer (shared by base and probability formulas)
    def bool_expr(self):
        start = self.tok.pos
        left = self._imp()
        while self.at("<->"):
            self.i += 1
            left = Bin("<->", left, self._imp(), span=(start, self.tok.pos))
        return left

    def _imp(self):
        start = self.tok.pos
        left = self._or()
        if self.at("->"):
            self.i += 1
            return Bin("->", left, self._imp(), span=(start, self.tok.pos))
        return left

    def _or(self):
        start = self.tok.pos
        left = self._and()
        while self.at("|"):
            self.i += 1
            left = Bin("|", left, self._and(), span=(start, self.tok.pos))
        return left

    def _and(self):
        start = self.tok.pos
        left = self._unary()
        while self.at("&"):
            self.i += 1
            left = Bin("&", left, self._unary(), span=(start, self.tok.pos))
        return left

    def _unary(self):
        start = self.tok.pos
        if self.at("!"):
            self.i += 1
            return Not(self._unary(), span=(start, self.tok.pos))
        return self._primary()

    def _primary(self):
        t = self.tok
        if t.kind == "ident" and not (t.text == "P" and self.peek().text == "("):
            return self.atom()
        if self._starts_term():
            save = self.i
            if save not in self._no_cmp:
                try:
                    return self.comparison()
                except _Backtrack:
                    self._no_cmp.add(save)
                    self.i = save
                    if not self.at("("):
                        raise
            self.eat("(")
            inner = self.bool_expr()
            self.eat(")")
            return inner
        self.fail("atom", "'!'", "'('", "'P('", "number")

    def atom(self) -> Atom:
        start = self.tok.pos
        name = self.ident()
        do = {}
        if self.at("["):
            self.i += 1
            if not self.at("]"):
                while True:
                    var = self.ident()
                    self.eat("=")
                    do[var] = self.value()
                    if self.at(","):
                        self.i += 1
                        continue
                    break
            self.eat("]")
        self.eat("=")
        val = self.value()
        return Atom(OutcomeKey(name, valuation(do)), val, span=(start, self.tok.pos))

    def ident(self) -> str:
        if self.tok.kind != "ident":
            self.fail("identifier")
        t = self.tok
        self.i += 1
        return t.text

    def value(self):
        t = self.tok
        if t.kind == "star":
            self.i += 1
            return STAR
        if t.kind == "num" and re.fullmatch(r"\d+", t.text):
            self.i += 1
            return int(t.text)
        if t.kind == "op" and t.text == "-" and self.peek().kind == "num" and self.peek().text.isdigit():
            self.i += 2
            return -int(self.peek(-1).text)
        if t.kind == "ident":
            self.i += 1
            return t.text
        self.fail("value")

    # -- comparisons and terms
    def comparison(self) -> Compare:
        start = self.tok.pos
        left, lden = self._side()
        if self.tok.kind != "op" or self.tok.text not in (">=", ">", "=", "<=", "<"):
            self.fail("'>='", "'>'", "'='", "'<='", "'<'", "'/'")
        op = self.tok.text
        self.i += 1
        right, rden = self._side()
        if (lden is not None or rden is not None) and op != "=":
            raise FormulaSyntaxError(self.text, start, {"'='"}, f"ratio under {op!r}")
        # a/b = c/d  ~~>  a*d = c*b
        if rden is not None:
            left = Arith("*", left, rden)
        if lden is not None:
            right = Arith("*", right, lden)
        return Compare(op, left, right, span=(start, self.tok.pos))

    def _side(self):
        num = self.term()
        if self.at("/"):
            self.i += 1
            return num, self.term()
        return num, None

    def term(self):
        start = self.tok.pos
        left = self._prod()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.tok.text
            self.i += 1
            left = Arith(op, left, self._prod(), span=(start, self.tok.pos))
        return left

    def _prod(self):
        start = self.tok.pos
        left = self._tunary()
        while self.at("*"):
            self.i += 1
            left = Arith("*", left, self._tunary(), span=(start, self.tok.pos))
        return left

    def _tunary(self):
        start = self.tok.pos
        if self.at("-"):
            self.i += 1
            if self.tok.kind == "num":
                lit = self._tprimary()
                return Lit(-lit.value, span=(start, self.tok.pos))
            return Neg(self._tunary(), span=(start, self.tok.pos))
        return self._tprimary()

    def _tprimary(self):
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return Lit(Fraction(t.text), span=(t.pos, t.pos + len(t.text)))
        if t.kind == "ident" and t.text == "P" and self.peek().text == "(":
            self.i += 2
            inner = self.bool_expr()
            if not is_base(inner):
                raise FormulaSyntaxError(self.text, t.pos, {"base formula"}, "comparison inside P(...)")
            self.eat(")")
            return Prob(inner, span=(t.pos, self.tok.pos))
        if self.at("("):
            self.i += 1
            inner = self.term()
            self.eat(")")
            return inner
        self.fail("'P('", "number", "'('", "'-'")


def parse(text: str):
    """Parse a base formula, a probability term, or a probability formula."""
    return Parser(text).parse()


def parse_base(text: str):
    node = parse(text)
    if not is_base(node):
        raise FormulaSyntaxError(text, 0, {"base formula"}, type(node).__name__)
    return node


def parse_formula(text: str):
    node = parse(text)
    if not is_lformula(node):
        raise FormulaSyntaxError(text, 0, {"probability formula"}, type(node).__name__)
    return node
