"""Syntax trees for counterfactual formulas and probability terms.

Boolean structure (``Not``/``Bin``) is shared between the base language, whose
leaves are ``Atom`` nodes, and the probability language, whose leaves are
``Compare`` nodes.  Printing produces the canonical concrete syntax accepted by
:mod:`rcmscm.lang.parser`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Tuple, Union

from ..core import OutcomeKey, Value, format_rational, format_value, format_valuation

Span = Optional[Tuple[int, int]]

# binding strength, loosest first
_BOOL_PREC = {"<->": 1, "->": 2, "|": 3, "&": 4}
BOOL_OPS = tuple(_BOOL_PREC)
CMP_OPS = (">=", ">", "=", "<=", "<")


def _span():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Atom:
    key: OutcomeKey
    value: Value
    span: Span = _span()

    def __str__(self):
        k = self.key
        head = k.outcome if not k.intervention else f"{k.outcome}[{format_valuation(k.intervention)}]"
        return f"{head}={format_value(self.value)}"


@dataclass(frozen=True)
class Not:
    arg: "Formula"
    span: Span = _span()

    def __str__(self):
        inner = str(self.arg)
        if isinstance(self.arg, Bin) or isinstance(self.arg, Compare):
            inner = f"({inner})"
        return f"!{inner}"


@dataclass(frozen=True)
class Bin:
    op: str
    left: "Formula"
    right: "Formula"
    span: Span = _span()

    def __post_init__(self):
        if self.op not in _BOOL_PREC:
            raise ValueError(f"unknown connective {self.op!r}")

    def __str__(self):
        prec = _BOOL_PREC[self.op]
        right_assoc = self.op == "->"

        def wrap(sub, is_left):
            if isinstance(sub, Bin):
                p = _BOOL_PREC[sub.op]
                tight = p < prec or (p == prec and (is_left == right_assoc))
                if tight:
                    return f"({sub})"
            return str(sub)

        return f"{wrap(self.left, True)} {self.op} {wrap(self.right, False)}"


# ---------------------------------------------------------------- terms

_TERM_PREC = {"+": 1, "-": 1, "*": 2}


@dataclass(frozen=True)
class Prob:
    arg: "Formula"
    span: Span = _span()

    def __str__(self):
        return f"P({self.arg})"


@dataclass(frozen=True)
class Lit:
    value: Fraction
    span: Span = _span()

    def __post_init__(self):
        object.__setattr__(self, "value", Fraction(self.value))

    def __str__(self):
        return format_rational(self.value)


@dataclass(frozen=True)
class Neg:
    arg: "Term"
    span: Span = _span()

    def __str__(self):
        if isinstance(self.arg, (Arith, Lit, Neg)):
            return f"-({self.arg})"
        return f"-{self.arg}"


@dataclass(frozen=True)
class Arith:
    op: str  # '+', '-', '*'
    left: "Term"
    right: "Term"
    span: Span = _span()

    def __post_init__(self):
        if self.op not in _TERM_PREC:
            raise ValueError(f"unknown arithmetic operator {self.op!r}")

    def __str__(self):
        prec = _TERM_PREC[self.op]

        def wrap(sub, is_left):
            if isinstance(sub, Arith):
                p = _TERM_PREC[sub.op]
                if p < prec or (p == prec and not is_left):
                    return f"({sub})"
            if isinstance(sub, Lit) and sub.value < 0:
                return f"({sub})"
            return str(sub)

        return f"{wrap(self.left, True)} {self.op} {wrap(self.right, False)}"


@dataclass(frozen=True)
class Compare:
    op: str
    left: "Term"
    right: "Term"
    span: Span = _span()

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise ValueError(f"unknown comparison {self.op!r}")

    def __str__(self):
        return f"{self.left} {self.op} {self.right}"


Formula = Union[Atom, Not, Bin, Compare]
Term = Union[Prob, Lit, Neg, Arith]


# ---------------------------------------------------------------- helpers

def conj(*parts: Formula) -> Formula:
    if not parts:
        raise ValueError("empty conjunction")
    out = parts[0]
    for p in parts[1:]:
        out = Bin("&", out, p)
    return out


def disj(*parts: Formula) -> Formula:
    if not parts:
        raise ValueError("empty disjunction")
    out = parts[0]
    for p in parts[1:]:
        out = Bin("|", out, p)
    return out


def add(*terms: Term) -> Term:
    out = terms[0]
    for t in terms[1:]:
        out = Arith("+", out, t)
    return out


def mul(a: Term, b: Term) -> Term:
    return Arith("*", a, b)


def sub(a: Term, b: Term) -> Term:
    return Arith("-", a, b)


def atom(outcome: str, value: Value, **do) -> Atom:
    return Atom(OutcomeKey.of(outcome, do), value)


def atoms(node) -> Iterator[Atom]:
    """All atoms of a formula or term, left to right."""
    if isinstance(node, Atom):
        yield node
    elif isinstance(node, (Not, Prob, Neg)):
        yield from atoms(node.arg)
    elif isinstance(node, (Bin, Arith, Compare)):
        yield from atoms(node.left)
        yield from atoms(node.right)


def keys_of(node) -> list[OutcomeKey]:
    seen = {}
    for a in atoms(node):
        seen.setdefault(a.key, None)
    return list(seen)


def is_base(node) -> bool:
    if isinstance(node, Atom):
        return True
    if isinstance(node, Not):
        return is_base(node.arg)
    if isinstance(node, Bin):
        return is_base(node.left) and is_base(node.right)
    return False


def is_term(node) -> bool:
    return isinstance(node, (Prob, Lit, Neg, Arith))


def is_lformula(node) -> bool:
    if isinstance(node, Compare):
        return True
    if isinstance(node, Not):
        return is_lformula(node.arg)
    if isinstance(node, Bin):
        return is_lformula(node.left) and is_lformula(node.right)
    return False
