"""Exact evaluation of base formulas, probability terms and probability formulas."""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Mapping

from ..core import OutcomeKey, UnknownOutcomeKey, Value, parse_key
from .ast import Arith, Atom, Bin, Compare, Lit, Neg, Not, Prob, add, keys_of, mul

FORALL = "forall"
EXISTS = "exists"
_QUANT_ALIASES = {"forall": FORALL, "all": FORALL, "∀": FORALL, "exists": EXISTS, "some": EXISTS, "∃": EXISTS}


def quantifier(q: str) -> str:
    try:
        return _QUANT_ALIASES[q.lower() if q.isascii() else q]
    except KeyError:
        raise ValueError(f"unknown quantifier {q!r}") from None


def _connective(op: str, a: bool, b: bool) -> bool:
    if op == "&":
        return a and b
    if op == "|":
        return a or b
    if op == "->":
        return (not a) or b
    return a == b


def eval_base(f, row: Mapping[OutcomeKey, Value]) -> bool:
    """Classical truth of a base formula at one counterfactual row."""
    if isinstance(f, Atom):
        try:
            return row[f.key] == f.value
        except KeyError:
            raise UnknownOutcomeKey(f.key) from None
    if isinstance(f, Not):
        return not eval_base(f.arg, row)
    if isinstance(f, Bin):
        return _connective(f.op, eval_base(f.left, row), eval_base(f.right, row))
    raise TypeError(f"not a base formula: {f!r}")


def eval_term(source, t) -> Fraction:
    """Value of a probability term; ``source`` provides ``probability(base_formula)``."""
    if isinstance(t, Prob):
        return source.probability(t.arg)
    if isinstance(t, Lit):
        return t.value
    if isinstance(t, Neg):
        return -eval_term(source, t.arg)
    if isinstance(t, Arith):
        a, b = eval_term(source, t.left), eval_term(source, t.right)
        if t.op == "+":
            return a + b
        if t.op == "-":
            return a - b
        return a * b
    raise TypeError(f"not a term: {t!r}")


def _compare(op: str, a: Fraction, b: Fraction) -> bool:
    return {">=": a >= b, ">": a > b, "=": a == b, "<=": a <= b, "<": a < b}[op]


def eval_formula(source, phi) -> bool:
    if isinstance(phi, Compare):
        return _compare(phi.op, eval_term(source, phi.left), eval_term(source, phi.right))
    if isinstance(phi, Not):
        return not eval_formula(source, phi.arg)
    if isinstance(phi, Bin):
        return _connective(phi.op, eval_formula(source, phi.left), eval_formula(source, phi.right))
    raise TypeError(f"not a probability formula: {phi!r}")


def encode(q: str, zeta) -> Compare:
    """Unit-quantified base formula to a probability statement.

    ``forall u. zeta`` becomes ``P(!zeta) = 0`` and ``exists u. zeta`` becomes ``P(zeta) > 0``.
    """
    if quantifier(q) == FORALL:
        return Compare("=", Prob(Not(zeta)), Lit(0))
    return Compare(">", Prob(zeta), Lit(0))


def holds_pointwise(R, zeta, q: str, include_zero_mass: bool = False) -> bool:
    """Evaluate ``zeta`` unit by unit on an RCM's response rows."""
    outcomes = set(R.outcomes)
    for k in keys_of(zeta):
        if k not in outcomes:
            raise UnknownOutcomeKey(k)
    units = R.units if include_zero_mass else R.positive_units()
    truths = (eval_base(zeta, R.responses[u]) for u in units)
    return all(truths) if quantifier(q) == FORALL else any(truths)


def expectation(key: OutcomeKey, domain) -> Arith | Lit:
    """``E(Y_x)`` for an integer-valued outcome, as a signed sum of probabilities."""
    parts = [mul(Lit(v), Prob(Atom(key, v))) for v in domain if v != 0]
    if not parts:
        return Lit(0)
    return add(*parts)


_EXPECT_RE = re.compile(r"\bE\(\s*([A-Za-z_][A-Za-z0-9_.']*\s*(?:\[[^\]]*\])?)\s*\)")


def expand_expectations(text: str, domain_of) -> str:
    """Rewrite ``E(Y[X=1])`` occurrences into probability sums.

    ``domain_of`` maps a variable name to its (integer) domain.
    """
    def repl(m):
        key = parse_key(m.group(1))
        dom = domain_of(key.outcome)
        if not all(isinstance(v, int) for v in dom):
            raise ValueError(f"E(...) needs an integer-valued outcome, {key.outcome} is not")
        return f"({expectation(key, dom)})"

    return _EXPECT_RE.sub(repl, text)
