"""Packaged scenarios: the instrument family, the abstraction pair and the Verma diagram.

The models live as JSON under ``rcmscm/data``; this module loads them and builds
the probability terms used to analyse them (intention-to-treat effects, LATE and
the instrument assumptions).
"""

from __future__ import annotations

from fractions import Fraction
from importlib import resources

from .core import OutcomeKey
from .lang.ast import Atom, Compare, Prob, add, conj, sub
from .lang.parser import parse, parse_base
from .lang.semantics import eval_term
from .model import Rcm, cf_distribution_rcm

BINARY = (0, 1)


def data_path(name: str):
    return resources.files("rcmscm") / "data" / name


def load_data(name: str, **params):
    from .io import load

    with resources.as_file(data_path(name)) as p:
        return load(p, params or None)


def instrument_family(eps=0) -> Rcm:
    """The instrument family R(eps): effects agree across eps while LATE drifts."""
    return load_data("instrument.json", eps=str(Fraction(eps)))


def abstraction_pair():
    """(high model, low model, translation)"""
    return load_data("pair_high.json"), load_data("pair_low.json"), load_data("pair_tau.json")


def enlarged_low() -> Rcm:
    """The low model enlarged with ``Y[X=1]=1``."""
    L = load_data("pair_low.json")
    return L.with_responses({OutcomeKey.of("Y", {"X": 1}): {u: 1 for u in L.units}})


def verma_graph():
    return load_data("verma_graph.json")


def verma_latent():
    return load_data("verma_latent.json")


def verma_scm():
    return load_data("verma_scm.json")


# ---------------------------------------------------------------- instrument terms over Z, X, Y


def _y(x, z=None):
    do = {"X": x} if z is None else {"X": x, "Z": z}
    return OutcomeKey.of("Y", do)


def _x(z):
    return OutcomeKey.of("X", {"Z": z})


def itt2():
    """Effect of assignment on treatment received."""
    pos = conj(Atom(_x(1), 1), Atom(_x(0), 0))
    neg = conj(Atom(_x(1), 0), Atom(_x(0), 1))
    return sub(Prob(pos), Prob(neg))


def _nested(y_hi, y_lo):
    """``P(Y_{1,X_1} = y_hi & Y_{0,X_0} = y_lo)`` expanded over the treatment each arm receives."""
    parts = []
    for x1 in BINARY:
        for x0 in BINARY:
            parts.append(Prob(conj(Atom(_y(x1, 1), y_hi), Atom(_x(1), x1), Atom(_y(x0, 0), y_lo), Atom(_x(0), x0))))
    return add(*parts)


def itt1():
    """Effect of assignment on the outcome, with treatment at the level the assignment induces."""
    return sub(_nested(1, 0), _nested(0, 1))


def itt1_marginal():
    """The same effect written as a difference of two single-arm probabilities."""
    arm = lambda z: add(*(Prob(conj(Atom(_y(x, z), 1), Atom(_x(z), x))) for x in BINARY))
    return sub(arm(1), arm(0))


def itt1_simple():
    """``E(Y[Z=1] - Y[Z=0])`` for binary Y."""
    return sub(Prob(Atom(OutcomeKey.of("Y", {"Z": 1}), 1)), Prob(Atom(OutcomeKey.of("Y", {"Z": 0}), 1)))


def complier():
    return conj(Atom(_x(1), 1), Atom(_x(0), 0))


def late_parts():
    """(numerator, denominator) of the treatment effect among compliers."""
    c = complier()
    num = sub(Prob(conj(Atom(_y(1), 1), Atom(_y(0), 0), c)), Prob(conj(Atom(_y(1), 0), Atom(_y(0), 1), c)))
    return num, Prob(c)


def late_identity() -> Compare:
    """``LATE = ITT1 / ITT2`` with both ratios cleared, read through the parser's ratio sugar."""
    num, den = late_parts()
    return parse(f"{num} / {den} = {itt1()} / {itt2()}")


def monotonicity():
    return parse_base("X[Z=0]=1 -> X[Z=1]=1")


def exclusion_restriction():
    return conj(*(parse_base(f"Y[X={x},Z=0]=1 <-> Y[X={x},Z=1]=1") for x in BINARY))


def outcome_decomposition():
    return conj(*(parse_base(f"Y[X={x}]=1 <-> Y[X={x},Z=1]=1") for x in BINARY))


INSTRUMENT_KEYS = tuple(
    [_x(1), _x(0)] + [_y(x, z) for x in BINARY for z in BINARY] + [_y(x) for x in BINARY]
)


def instrument_report(R: Rcm) -> dict[str, Fraction | None]:
    d = cf_distribution_rcm(R)
    out = {"ITT1": eval_term(d, itt1()), "ITT2": eval_term(d, itt2())}
    num, den = late_parts()
    n, dd = eval_term(d, num), eval_term(d, den)
    out["LATE"] = n / dd if dd else None
    out["ITT1/ITT2"] = out["ITT1"] / out["ITT2"] if out["ITT2"] else None
    return out
