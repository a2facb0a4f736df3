"""Finite Rubin causal models, structural causal models and their counterfactual distributions.

Everything is exact: masses are ``Fraction`` and no operation rounds.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Optional, Sequence

from .core import (
    EMPTY,
    NonUniqueSolution,
    OutcomeKey,
    UnknownOutcomeKey,
    Valuation,
    Value,
    Variable,
    format_rational,
    format_valuation,
    sorted_keys,
    to_rational,
    valuation,
    valuation_sort_key,
)


def _domains(variables: Iterable[Variable]) -> dict[str, tuple]:
    return {v.name: v.domain for v in variables}


def all_interventions(variables: Sequence[Variable]) -> Iterator[Valuation]:
    """Every partial valuation over every subset, in canonical order (empty first)."""
    out = []
    names = [v.name for v in variables]
    doms = _domains(variables)
    for r in range(len(names) + 1):
        for subset in itertools.combinations(sorted(names), r):
            for vals in itertools.product(*(doms[n] for n in subset)):
                out.append(tuple(zip(subset, vals)))
    out.sort(key=valuation_sort_key)
    return iter(out)


def full_keys(variables: Sequence[Variable]) -> list[OutcomeKey]:
    """Every potential outcome ``Y_x`` for ``Y`` in V and ``x`` over any subset of V."""
    names = sorted(v.name for v in variables)
    return [OutcomeKey(y, x) for x in all_interventions(variables) for y in names]


# ---------------------------------------------------------------- RCM


@dataclass(frozen=True, eq=False)
class Rcm:
    """Units with masses, a set of potential-outcome keys and a response table.

    ``responses[u][key]`` is the value of ``key`` at unit ``u``.  Construction does
    not validate; use :func:`validate_rcm` (the file loader does this for you).
    """

    variables: tuple[Variable, ...]
    units: tuple[str, ...]
    mass: Mapping[str, Fraction]
    outcomes: tuple[OutcomeKey, ...]
    responses: Mapping[str, Mapping[OutcomeKey, Value]]

    @classmethod
    def build(cls, variables, masses: Mapping[str, object], responses: Mapping[str, Mapping[OutcomeKey, Value]],
              outcomes: Iterable[OutcomeKey] | None = None) -> "Rcm":
        variables = tuple(variables)
        units = tuple(masses)
        mass = {u: to_rational(m) for u, m in masses.items()}
        if outcomes is None:
            keys = set()
            for row in responses.values():
                keys.update(row)
            outcomes = keys
        outcomes = tuple(sorted_keys(set(outcomes)))
        resp = {u: dict(responses.get(u, {})) for u in units}
        return cls(variables, units, mass, outcomes, resp)

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def domain(self, name: str) -> tuple:
        for v in self.variables:
            if v.name == name:
                return v.domain
        raise KeyError(name)

    def positive_units(self) -> list[str]:
        return [u for u in self.units if self.mass[u] > 0]

    def row(self, unit: str) -> dict[OutcomeKey, Value]:
        return dict(self.responses[unit])

    def value(self, unit: str, key: OutcomeKey) -> Value:
        try:
            return self.responses[unit][key]
        except KeyError:
            raise UnknownOutcomeKey(key) from None

    def interventions(self) -> list[Valuation]:
        return sorted({k.intervention for k in self.outcomes}, key=valuation_sort_key)

    def restrict(self, keys: Iterable[OutcomeKey]) -> "Rcm":
        keys = set(keys)
        missing = keys - set(self.outcomes)
        if missing:
            raise UnknownOutcomeKey(sorted_keys(missing)[0])
        resp = {u: {k: v for k, v in r.items() if k in keys} for u, r in self.responses.items()}
        return Rcm(self.variables, self.units, dict(self.mass), tuple(sorted_keys(keys)), resp)

    def with_responses(self, extra: Mapping[OutcomeKey, Mapping[str, Value]]) -> "Rcm":
        """A copy with additional keys; ``extra[key][unit]`` gives the new responses."""
        resp = {u: dict(r) for u, r in self.responses.items()}
        for key, per_unit in extra.items():
            for u in self.units:
                resp[u][key] = per_unit[u]
        keys = set(self.outcomes) | set(extra)
        return Rcm(self.variables, self.units, dict(self.mass), tuple(sorted_keys(keys)), resp)


@dataclass(frozen=True)
class EffectivenessViolation:
    key: OutcomeKey
    unit: str
    value: Value

    def __str__(self):
        return f"{self.key} = {self.value} at unit {self.unit}, expected {dict(self.key.intervention)[self.key.outcome]}"


@dataclass
class ValidationReport:
    problems: list[str] = field(default_factory=list)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems and not self.violations

    @property
    def well_formed(self) -> bool:
        return not self.problems

    def lines(self) -> list[str]:
        out = [f"problem: {p}" for p in self.problems]
        out += [f"violation: {v}" for v in self.violations]
        return out or ["ok"]


def validate_rcm(R: Rcm) -> ValidationReport:
    rep = ValidationReport()
    doms = {}
    for v in R.variables:
        if v.name in doms:
            rep.problems.append(f"duplicate variable {v.name}")
        doms[v.name] = v.domain
    if len(set(R.units)) != len(R.units):
        rep.problems.append("duplicate unit names")
    for u in R.units:
        if u not in R.mass:
            rep.problems.append(f"unit {u} has no mass")
        elif R.mass[u] < 0:
            rep.problems.append(f"unit {u} has negative mass {format_rational(R.mass[u])}")
    total = sum((R.mass.get(u, Fraction(0)) for u in R.units), Fraction(0))
    if total != 1:
        rep.problems.append(f"unit masses sum to {format_rational(total)}, not 1")
    for key in R.outcomes:
        if key.outcome not in doms:
            rep.problems.append(f"outcome key {key} names unknown variable {key.outcome}")
        for var, val in key.intervention:
            if var not in doms:
                rep.problems.append(f"outcome key {key} intervenes on unknown variable {var}")
            elif val not in doms[var]:
                rep.problems.append(f"outcome key {key} sets {var} outside its domain")
    for u in R.units:
        row = R.responses.get(u, {})
        for key in R.outcomes:
            if key not in row:
                rep.problems.append(f"no response for {key} at unit {u}")
            elif key.outcome in doms and row[key] not in doms[key.outcome]:
                rep.problems.append(f"response {key} = {row[key]!r} at unit {u} is outside the domain")
        for key in row:
            if key not in R.outcomes:
                rep.problems.append(f"unit {u} answers undeclared key {key}")
    for key in R.outcomes:
        do = dict(key.intervention)
        if key.outcome not in do:
            continue
        for u in R.units:
            val = R.responses.get(u, {}).get(key)
            if val is not None and val != do[key.outcome]:
                rep.violations.append(EffectivenessViolation(key, u, val))
    return rep


# ---------------------------------------------------------------- SCM


@dataclass(frozen=True, eq=False)
class Mechanism:
    """A structural function with declared exogenous and endogenous parents.

    Either ``table`` (inputs tuple, ordered as ``u_parents + v_parents``, to value)
    or ``func`` (called with the same positional inputs) must be given.
    """

    u_parents: tuple[str, ...]
    v_parents: tuple[str, ...]
    table: Optional[Mapping[tuple, Value]] = None
    func: Optional[Callable[..., Value]] = None

    def __post_init__(self):
        object.__setattr__(self, "u_parents", tuple(self.u_parents))
        object.__setattr__(self, "v_parents", tuple(self.v_parents))
        if (self.table is None) == (self.func is None):
            raise ValueError("a mechanism needs exactly one of table or func")

    @classmethod
    def constant(cls, value: Value) -> "Mechanism":
        return cls((), (), table={(): value})

    def __call__(self, u: Mapping[str, Value], v: Mapping[str, Value]) -> Value:
        args = tuple(u[p] for p in self.u_parents) + tuple(v[p] for p in self.v_parents)
        if self.table is not None:
            return self.table[args]
        return self.func(*args)

    def to_table(self, domains: Mapping[str, tuple]) -> dict[tuple, Value]:
        spaces = [domains[p] for p in self.u_parents + self.v_parents]
        return {args: (self.table[args] if self.table is not None else self.func(*args))
                for args in itertools.product(*spaces)}


@dataclass(frozen=True, eq=False)
class Scm:
    exogenous: tuple[Variable, ...]
    endogenous: tuple[Variable, ...]
    mechanisms: Mapping[str, Mechanism]
    exo_mass: Mapping[Valuation, Fraction]

    @classmethod
    def build(cls, exogenous, endogenous, mechanisms, exo_mass) -> "Scm":
        mass = {}
        for u, m in exo_mass.items():
            mass[valuation(u)] = mass.get(valuation(u), Fraction(0)) + to_rational(m)
        return cls(tuple(exogenous), tuple(endogenous), dict(mechanisms), mass)

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.endogenous]

    def domains(self) -> dict[str, tuple]:
        return _domains(self.exogenous + self.endogenous)

    def support(self) -> list[Valuation]:
        return sorted((u for u, m in self.exo_mass.items() if m > 0), key=valuation_sort_key)

    def parents(self) -> dict[str, tuple[str, ...]]:
        return {v: self.mechanisms[v].v_parents for v in self.names}

    def topological_order(self, cut: Iterable[str] = ()) -> Optional[list[str]]:
        """Order of endogenous variables along declared parents, ignoring parents of ``cut``."""
        cut = set(cut)
        pa = {v: (() if v in cut else self.mechanisms[v].v_parents) for v in self.names}
        order, state = [], {}

        def visit(v):
            if state.get(v) == 1:
                return False
            if state.get(v) == 2:
                return True
            state[v] = 1
            for p in pa[v]:
                if not visit(p):
                    return False
            state[v] = 2
            order.append(v)
            return True

        for v in self.names:
            if not visit(v):
                return None
        return order

    def is_recursive(self) -> bool:
        return self.topological_order() is not None


def validate_scm(M: Scm) -> ValidationReport:
    rep = ValidationReport()
    doms = M.domains()
    names = M.names
    exo = [v.name for v in M.exogenous]
    if len(set(names) | set(exo)) != len(names) + len(exo):
        rep.problems.append("variable names are not distinct")
    for v in names:
        if v not in M.mechanisms:
            rep.problems.append(f"no mechanism for {v}")
            continue
        mech = M.mechanisms[v]
        for p in mech.u_parents:
            if p not in exo:
                rep.problems.append(f"{v} lists unknown exogenous parent {p}")
        for p in mech.v_parents:
            if p not in names or p == v:
                rep.problems.append(f"{v} lists invalid endogenous parent {p}")
        if rep.problems:
            continue
        spaces = [doms[p] for p in mech.u_parents + mech.v_parents]
        for args in itertools.product(*spaces):
            try:
                val = mech.table[args] if mech.table is not None else mech.func(*args)
            except KeyError:
                rep.problems.append(f"mechanism of {v} undefined at {args}")
                break
            if val not in doms[v]:
                rep.problems.append(f"mechanism of {v} returns {val!r} outside its domain")
                break
    for m in M.mechanisms:
        if m not in names:
            rep.problems.append(f"mechanism for unknown variable {m}")
    total = Fraction(0)
    for u, m in M.exo_mass.items():
        if m < 0:
            rep.problems.append(f"negative exogenous mass at {format_valuation(u)}")
        if set(dict(u)) != set(exo):
            rep.problems.append(f"exogenous row {format_valuation(u)} is not total")
        total += m
    if total != 1:
        rep.problems.append(f"exogenous masses sum to {format_rational(total)}, not 1")
    return rep


def solve_scm(M: Scm, u: Valuation | Mapping[str, Value], x: Valuation | Mapping[str, Value] = EMPTY,
              *, exhaustive: bool = False) -> list[Valuation]:
    """All endogenous valuations solving ``M`` under intervention ``x`` at exogenous ``u``."""
    u = dict(u)
    x = dict(x)
    order = None if exhaustive else M.topological_order(cut=x)
    if order is not None:
        v = {}
        for name in order:
            v[name] = x[name] if name in x else M.mechanisms[name](u, v)
        return [valuation(v)]
    doms = _domains(M.endogenous)
    free = [n for n in M.names if n not in x]
    out = []
    for vals in itertools.product(*(doms[n] for n in free)):
        v = dict(x)
        v.update(zip(free, vals))
        if all(M.mechanisms[n](u, v) == v[n] for n in free):
            out.append(valuation(v))
    return sorted(out, key=valuation_sort_key)


@dataclass(frozen=True)
class SolvabilityResult:
    ok: bool
    witness: Optional[tuple[Valuation, Valuation, int]] = None  # (u, x, number of solutions)

    def __bool__(self):
        return self.ok


def check_unique_solvability(M: Scm) -> SolvabilityResult:
    if M.is_recursive():
        return SolvabilityResult(True)
    for u in M.support():
        for x in all_interventions(M.endogenous):
            n = len(solve_scm(M, u, x))
            if n != 1:
                return SolvabilityResult(False, (u, x, n))
    return SolvabilityResult(True)


def scm_potential_outcome(M: Scm, u, key: OutcomeKey) -> Value:
    sols = solve_scm(M, u, key.intervention)
    if len(sols) != 1:
        raise NonUniqueSolution(valuation(u), key.intervention, len(sols))
    return dict(sols[0])[key.outcome]


def _scm_rows(M: Scm, keys: Sequence[OutcomeKey]) -> Iterator[tuple[Valuation, Fraction, tuple]]:
    by_x = defaultdict(list)
    for i, k in enumerate(keys):
        by_x[k.intervention].append(i)
    for u in M.support():
        row = [None] * len(keys)
        for x, idx in by_x.items():
            sols = solve_scm(M, u, x)
            if len(sols) != 1:
                raise NonUniqueSolution(u, x, len(sols))
            sol = dict(sols[0])
            for i in idx:
                row[i] = sol[keys[i].outcome]
        yield u, M.exo_mass[u], tuple(row)


# ---------------------------------------------------------------- distributions


@dataclass(frozen=True, eq=False)
class CfDistribution:
    """Exact distribution over joint valuations of ``outcomes``.

    ``mass`` maps value tuples aligned with ``outcomes`` to positive rationals.
    """

    outcomes: tuple[OutcomeKey, ...]
    mass: Mapping[tuple, Fraction]

    @classmethod
    def from_rows(cls, outcomes: Sequence[OutcomeKey], rows: Iterable[tuple[tuple, Fraction]]) -> "CfDistribution":
        outcomes = tuple(outcomes)
        order = sorted(range(len(outcomes)), key=lambda i: outcomes[i].sort_key())
        acc: dict[tuple, Fraction] = defaultdict(Fraction)
        for vals, m in rows:
            if m:
                acc[tuple(vals[i] for i in order)] += m
        return cls(tuple(outcomes[i] for i in order), dict(acc))

    def total(self) -> Fraction:
        return sum(self.mass.values(), Fraction(0))

    def support(self) -> list[tuple[dict[OutcomeKey, Value], Fraction]]:
        return [(dict(zip(self.outcomes, vals)), m) for vals, m in self.mass.items()]

    def _index(self) -> dict[OutcomeKey, int]:
        return {k: i for i, k in enumerate(self.outcomes)}

    def marginalize(self, keys: Iterable[OutcomeKey]) -> "CfDistribution":
        idx = self._index()
        keys = list(keys)
        for k in keys:
            if k not in idx:
                raise UnknownOutcomeKey(k)
        pos = [idx[k] for k in keys]
        return CfDistribution.from_rows(keys, ((tuple(v[i] for i in pos), m) for v, m in self.mass.items()))

    def probability(self, formula) -> Fraction:
        return query_probability(self, formula)

    def __eq__(self, other):
        if not isinstance(other, CfDistribution):
            return NotImplemented
        if set(self.outcomes) != set(other.outcomes):
            return False
        return _as_pairs(self) == _as_pairs(other)

    def __hash__(self):
        return hash(frozenset(_as_pairs(self).items()))

    def lines(self) -> list[str]:
        out = []
        for vals, m in sorted(self.mass.items(), key=lambda kv: [str(x) for x in kv[0]]):
            cells = " ".join(f"{k}={v}" for k, v in zip(self.outcomes, vals))
            out.append(f"{format_rational(m)}  {cells}")
        return out


def _as_pairs(d: CfDistribution) -> dict[frozenset, Fraction]:
    return {frozenset(zip(d.outcomes, vals)): m for vals, m in d.mass.items()}


def cf_distribution_rcm(R: Rcm) -> CfDistribution:
    keys = R.outcomes
    rows = ((tuple(R.responses[u][k] for k in keys), R.mass[u]) for u in R.units)
    return CfDistribution.from_rows(keys, rows)


def cf_distribution_scm(M: Scm, outcomes: Iterable[OutcomeKey]) -> CfDistribution:
    keys = tuple(sorted_keys(set(outcomes)))
    return CfDistribution.from_rows(keys, ((row, m) for _, m, row in _scm_rows(M, keys)))


def query_probability(d: CfDistribution, formula) -> Fraction:
    from .lang.ast import keys_of
    from .lang.semantics import eval_base

    idx = d._index()
    for k in keys_of(formula):
        if k not in idx:
            raise UnknownOutcomeKey(k)
    total = Fraction(0)
    for vals, m in d.mass.items():
        if eval_base(formula, dict(zip(d.outcomes, vals))):
            total += m
    return total


def unit_name(u: Valuation) -> str:
    return "u[" + format_valuation(u) + "]"


def rcm_from_scm(M: Scm, outcomes: Iterable[OutcomeKey] | None = None) -> Rcm:
    """The RCM whose units are the positive-mass exogenous valuations of ``M``.

    With ``outcomes=None`` the result is full: every ``Y_x`` is defined.
    """
    keys = tuple(sorted_keys(set(outcomes))) if outcomes is not None else tuple(full_keys(M.endogenous))
    masses, resp = {}, {}
    for u, m, row in _scm_rows(M, keys):
        name = unit_name(u)
        masses[name] = m
        resp[name] = dict(zip(keys, row))
    return Rcm(tuple(M.endogenous), tuple(masses), masses, keys, resp)
