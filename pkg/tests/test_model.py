import random
from fractions import Fraction

import pytest
from gen import cf_distribution_oracle, random_rcm, random_scm, solutions_by_definition
from hypothesis import given, settings
from hypothesis import strategies as st

from rcmscm.core import NonUniqueSolution, OutcomeKey, UnknownOutcomeKey, Variable, parse_key, to_rational, valuation
from rcmscm.model import (
    Mechanism,
    Rcm,
    Scm,
    cf_distribution_rcm,
    cf_distribution_scm,
    check_unique_solvability,
    full_keys,
    rcm_from_scm,
    scm_potential_outcome,
    solve_scm,
    validate_rcm,
    validate_scm,
)

seeds = st.integers(0, 10**6)


@settings(max_examples=80, deadline=None)
@given(seeds)
def test_fast_solver_matches_exhaustive(seed):
    rng = random.Random(seed)
    M = random_scm(rng, n_endo=3, max_dom=2, acyclic=True)
    for u in M.support():
        for k in full_keys(M.endogenous):
            fast = solve_scm(M, u, k.intervention)
            slow = solve_scm(M, u, k.intervention, exhaustive=True)
            assert fast == slow
            assert [dict(s) for s in slow] == solutions_by_definition(M, u, k.intervention)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_cf_distribution_matches_oracle(seed):
    rng = random.Random(seed)
    M = random_scm(rng, n_endo=3, max_dom=2, acyclic=True)
    keys = full_keys(M.endogenous)
    d = cf_distribution_scm(M, keys)
    assert d.total() == 1
    oracle = cf_distribution_oracle(M, d.outcomes)
    assert dict(d.mass) == oracle


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_rcm_from_scm_preserves_distribution(seed):
    rng = random.Random(seed)
    M = random_scm(rng, n_endo=3, max_dom=2)
    R = rcm_from_scm(M)
    assert validate_rcm(R).ok
    assert cf_distribution_rcm(R) == cf_distribution_scm(M, R.outcomes)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_marginalize_is_consistent(seed):
    rng = random.Random(seed)
    R = random_rcm(rng)
    d = cf_distribution_rcm(R)
    keys = list(R.outcomes)
    sub = keys[: rng.randint(1, len(keys))]
    assert d.marginalize(sub) == cf_distribution_rcm(R.restrict(sub))
    assert d.marginalize(sub).total() == 1


def _cycle_scm(table_x, table_y):
    endo = (Variable("X", (0, 1)), Variable("Y", (0, 1)))
    exo = (Variable("U", (0,)),)
    mechs = {"X": Mechanism((), ("Y",), table=table_x), "Y": Mechanism((), ("X",), table=table_y)}
    return Scm.build(exo, endo, mechs, {valuation(U=0): 1})


def test_cyclic_scm_with_two_solutions_is_rejected():
    M = _cycle_scm({(0,): 0, (1,): 1}, {(0,): 0, (1,): 1})
    res = check_unique_solvability(M)
    assert not res
    assert res.witness[2] == 2
    with pytest.raises(NonUniqueSolution):
        scm_potential_outcome(M, valuation(U=0), OutcomeKey.of("X"))


def test_cyclic_scm_with_no_solution_is_rejected():
    M = _cycle_scm({(0,): 1, (1,): 0}, {(0,): 0, (1,): 1})
    assert check_unique_solvability(M).witness[2] == 0


def test_cyclic_but_uniquely_solvable():
    # X := 1 regardless of Y, Y := X; the graph has a cycle but one solution
    M = _cycle_scm({(0,): 1, (1,): 1}, {(0,): 0, (1,): 1})
    assert not M.is_recursive()
    assert check_unique_solvability(M)
    assert solve_scm(M, valuation(U=0)) == [valuation(X=1, Y=1)]


def test_effectiveness_violation_reported():
    v = (Variable("X", (0, 1)),)
    k = OutcomeKey.of("X", {"X": 1})
    R = Rcm.build(v, {"u": 1}, {"u": {k: 0}})
    rep = validate_rcm(R)
    assert rep.well_formed and not rep.ok
    assert rep.violations[0].unit == "u"


def test_masses_must_sum_to_one():
    v = (Variable("X", (0, 1)),)
    R = Rcm.build(v, {"u": "1/2"}, {"u": {OutcomeKey.of("X"): 0}})
    assert any("sum" in p for p in validate_rcm(R).problems)


def test_value_outside_domain_is_a_problem():
    v = (Variable("X", (0, 1)),)
    R = Rcm.build(v, {"u": 1}, {"u": {OutcomeKey.of("X"): 5}})
    assert validate_rcm(R).problems


def test_scm_validation_flags_bad_mass():
    M = _cycle_scm({(0,): 1, (1,): 1}, {(0,): 0, (1,): 1})
    bad = Scm(M.exogenous, M.endogenous, M.mechanisms, {valuation(U=0): Fraction(1, 2)})
    assert validate_scm(bad).problems


def test_unknown_key_lookup():
    v = (Variable("X", (0, 1)),)
    R = Rcm.build(v, {"u": 1}, {"u": {OutcomeKey.of("X"): 0}})
    with pytest.raises(UnknownOutcomeKey):
        R.value("u", parse_key("X[X=1]"))
    with pytest.raises(UnknownOutcomeKey):
        R.restrict([parse_key("X[X=1]")])


def test_zero_mass_units_leave_distribution():
    v = (Variable("X", (0, 1)),)
    k = OutcomeKey.of("X")
    R = Rcm.build(v, {"a": 1, "b": 0}, {"a": {k: 0}, "b": {k: 1}})
    d = cf_distribution_rcm(R)
    assert dict(d.mass) == {(0,): Fraction(1)}


def test_to_rational_is_exact():
    assert to_rational("0.25") == Fraction(1, 4)
    assert to_rational("3/4") == Fraction(3, 4)
    assert to_rational(0.1) == Fraction(1, 10)
    with pytest.raises(TypeError):
        to_rational(True)


def test_parse_key_round_trip():
    for text in ("Y[]", "Y[X=1]", "Y[X=1,Z=0]"):
        assert str(parse_key(text)) == text
    assert parse_key("Y") == parse_key("Y[]")
