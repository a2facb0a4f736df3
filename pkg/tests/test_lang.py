import random
from fractions import Fraction

import pytest
from gen import random_base_formula, random_rcm
from hypothesis import given, settings
from hypothesis import strategies as st

from rcmscm.core import STAR, OutcomeKey, UnknownOutcomeKey, valuation
from rcmscm.lang.ast import Arith, Atom, Bin, Compare, Lit, Neg, Not, Prob, keys_of
from rcmscm.lang.parser import FormulaSyntaxError, parse, parse_base, parse_formula
from rcmscm.lang.semantics import (
    EXISTS,
    FORALL,
    encode,
    eval_base,
    eval_formula,
    eval_term,
    expand_expectations,
    holds_pointwise,
    quantifier,
)
from rcmscm.model import cf_distribution_rcm

seeds = st.integers(0, 10**6)

names = st.sampled_from(["X", "Y", "Z", "W'", "V.1"])
values = st.one_of(st.integers(-2, 3), st.sampled_from(["a", "b", STAR]))
keys = st.builds(
    lambda out, do: OutcomeKey(out, valuation(do)),
    names,
    st.dictionaries(names, values, max_size=2),
)
atoms = st.builds(Atom, keys, values)


def _bool(leaf):
    return st.recursive(
        leaf,
        lambda sub: st.one_of(
            st.builds(Not, sub),
            st.builds(Bin, st.sampled_from(["&", "|", "->", "<->"]), sub, sub),
        ),
        max_leaves=6,
    )


base_formulas = _bool(atoms)
lits = st.builds(Lit, st.fractions(min_value=-3, max_value=3, max_denominator=4))
terms = st.recursive(
    st.one_of(lits, st.builds(Prob, base_formulas)),
    lambda sub: st.one_of(st.builds(Neg, sub), st.builds(Arith, st.sampled_from(["+", "-", "*"]), sub, sub)),
    max_leaves=5,
)
comparisons = st.builds(Compare, st.sampled_from([">=", ">", "=", "<=", "<"]), terms, terms)
prob_formulas = _bool(comparisons)


@settings(max_examples=300, deadline=None)
@given(base_formulas)
def test_base_formula_round_trip(f):
    assert parse(str(f)) == f


@settings(max_examples=200, deadline=None)
@given(terms)
def test_term_round_trip(t):
    assert parse(str(t)) == t


@settings(max_examples=200, deadline=None)
@given(prob_formulas)
def test_probability_formula_round_trip(f):
    assert parse(str(f)) == f


def test_precedence():
    f = parse("A=1 | B=1 & C=1 -> D=1 <-> E=1")
    assert f.op == "<->"
    assert f.left.op == "->"
    assert f.left.left.op == "|"
    assert f.left.left.right.op == "&"
    assert parse("A=1 -> B=1 -> C=1").right.op == "->"
    t = parse("1 - P(A=1) * 2 + 3")
    assert t.op == "+" and t.left.op == "-" and t.left.right.op == "*"


def test_ratio_sugar_clears_denominators():
    f = parse("P(A=1) / P(B=1) = P(C=1) / P(D=1)")
    assert f == parse("P(A=1) * P(D=1) = P(C=1) * P(B=1)")
    assert parse("P(A=1) = P(C=1) / P(D=1)") == parse("P(A=1) * P(D=1) = P(C=1)")
    with pytest.raises(FormulaSyntaxError):
        parse("P(A=1) / P(B=1) > 0")


def test_syntax_error_position():
    with pytest.raises(FormulaSyntaxError) as e:
        parse("X[Z=0]=1 & ")
    assert e.value.pos == 11
    with pytest.raises(FormulaSyntaxError) as e:
        parse("X[Z=0 =1")
    assert e.value.pos == 6
    with pytest.raises(FormulaSyntaxError):
        parse("X=1 & P(X=1) > 0")
    with pytest.raises(FormulaSyntaxError):
        parse_base("P(X=1)")
    with pytest.raises(FormulaSyntaxError):
        parse_formula("X=1")


def test_star_values_parse():
    a = parse("Y.1[X.1=0]=<star>")
    assert a.value is STAR and a.key.intervention == (("X.1", 0),)


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_probability_is_additive(seed):
    rng = random.Random(seed)
    R = random_rcm(rng)
    d = cf_distribution_rcm(R)
    doms = {v.name: v.domain for v in R.variables}
    a = random_base_formula(rng, list(R.outcomes), doms)
    b = random_base_formula(rng, list(R.outcomes), doms)
    P = d.probability
    assert P(Bin("|", a, b)) + P(Bin("&", a, b)) == P(a) + P(b)
    assert P(Not(a)) == 1 - P(a)
    t = Arith("*", Arith("-", Prob(a), Lit(Fraction(1, 3))), Neg(Prob(b)))
    assert eval_term(d, t) == (P(a) - Fraction(1, 3)) * -P(b)
    by_rows = sum((R.mass[u] for u in R.units if eval_base(a, R.responses[u])), Fraction(0))
    assert P(a) == by_rows


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_encoding_matches_unit_quantifiers(seed):
    rng = random.Random(seed)
    R = random_rcm(rng, effective=rng.random() < 0.5)
    doms = {v.name: v.domain for v in R.variables}
    zeta = random_base_formula(rng, list(R.outcomes), doms)
    d = cf_distribution_rcm(R)
    for q in (FORALL, EXISTS):
        assert holds_pointwise(R, zeta, q) == eval_formula(d, encode(q, zeta))


def test_encode_shapes():
    zeta = parse("X[Z=0]=1 -> X[Z=1]=1")
    assert str(encode("forall", zeta)) == "P(!(X[Z=0]=1 -> X[Z=1]=1)) = 0"
    assert str(encode("exists", zeta)) == "P(X[Z=0]=1 -> X[Z=1]=1) > 0"
    assert quantifier("∀") == FORALL and quantifier("some") == EXISTS
    with pytest.raises(ValueError):
        quantifier("most")


def test_expectation_sugar():
    dom = {"Y": (0, 1, 2)}.get
    text = expand_expectations("E(Y[X=1]) - E(Y[X=0]) >= 0", dom)
    f = parse(text)
    assert f == parse("(1 * P(Y[X=1]=1) + 2 * P(Y[X=1]=2)) - (1 * P(Y[X=0]=1) + 2 * P(Y[X=0]=2)) >= 0")
    with pytest.raises(ValueError):
        expand_expectations("E(Y) > 0", {"Y": ("a", "b")}.get)


def test_unknown_key_in_formula():
    rng = random.Random(0)
    R = random_rcm(rng)
    zeta = Atom(OutcomeKey.of("Q"), 0)
    with pytest.raises(UnknownOutcomeKey):
        holds_pointwise(R, zeta, FORALL)
    assert keys_of(parse("P(A=1 & B[A=0]=1) - P(A=1) > 0")) == [OutcomeKey.of("A"), OutcomeKey.of("B", {"A": 0})]
