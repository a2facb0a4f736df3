"""Composition and reversibility checks, full-extension search and SCM synthesis.

An RCM is representable when some uniquely solvable SCM induces its
counterfactual distribution.  That happens exactly when every positive-mass unit
extends to a full response row (one value for every ``Y_x``) that obeys
effectiveness, composition and reversibility.  The search below looks for such
rows unit by unit; a found row set is turned into an SCM whose mechanism for
``V`` reads ``V`` off the row under the intervention fixing all other variables.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .core import (
    OutcomeKey,
    PreconditionViolated,
    SearchBudgetExceeded,
    Valuation,
    Value,
    format_value,
    valuation,
    valuation_sort_key,
)
from .model import (
    Mechanism,
    Rcm,
    Scm,
    all_interventions,
    cf_distribution_rcm,
    cf_distribution_scm,
    check_unique_solvability,
    full_keys,
    validate_rcm,
)
from .core import Variable

EFFECTIVENESS = "effectiveness"
COMPOSITION = "composition"
REVERSIBILITY = "reversibility"
PRINCIPLES = (EFFECTIVENESS, COMPOSITION, REVERSIBILITY)


def _extend(w: Valuation, var: str, val: Value) -> Valuation:
    d = dict(w)
    d[var] = val
    return valuation(d)


@dataclass(frozen=True)
class PrincipleViolation:
    """A ground instance of a principle whose premises hold but whose conclusion fails.

    ``premises`` and ``conclusion`` are ``(key, value)`` pairs; ``actual`` is the
    value the model gives the conclusion key.
    """

    principle: str
    unit: str
    premises: tuple[tuple[OutcomeKey, Value], ...]
    conclusion: tuple[OutcomeKey, Value]
    actual: Value

    def holds_in(self, row) -> bool:
        """True when re-evaluating the implication on ``row`` shows it is falsified."""
        premises_hold = all(row[k] == v for k, v in self.premises)
        key, val = self.conclusion
        return premises_hold and row[key] != val

    def __str__(self):
        prem = " & ".join(f"{k}={format_value(v)}" for k, v in self.premises) or "true"
        key, val = self.conclusion
        return (f"{self.principle} at {self.unit}: {prem} -> {key}={format_value(val)}, "
                f"but {key}={format_value(self.actual)}")


def _composition_instances(keys: set[OutcomeKey], names: list[str]):
    """Yield (Y_w, Z_w, Z_{w,Y=.}) triples builder for defined keys; values filled per unit."""
    by_w: dict[Valuation, set[str]] = {}
    for k in keys:
        by_w.setdefault(k.intervention, set()).add(k.outcome)
    for w in sorted(by_w, key=valuation_sort_key):
        wvars = dict(w)
        for y in sorted(by_w[w]):
            for z in sorted(by_w[w]):
                if y == z or y in wvars or z in wvars:
                    continue
                yield w, y, z


def check_principle(R: Rcm, principle: str, include_zero_mass: bool = False) -> list[PrincipleViolation]:
    """All ground violations of ``principle`` among the keys ``R`` defines."""
    units = R.units if include_zero_mass else R.positive_units()
    keys = set(R.outcomes)
    out: list[PrincipleViolation] = []
    if principle == EFFECTIVENESS:
        for v in validate_rcm(R).violations:
            if v.unit in units:
                expected = dict(v.key.intervention)[v.key.outcome]
                out.append(PrincipleViolation(EFFECTIVENESS, v.unit, (), (v.key, expected), v.value))
        return out
    if principle == COMPOSITION:
        # Y_w = y & Z_w = z -> Z_{w,y} = z
        for u in units:
            row = R.responses[u]
            for w, y, z in _composition_instances(keys, R.names):
                yk, zk = OutcomeKey(y, w), OutcomeKey(z, w)
                yv, zv = row[yk], row[zk]
                target = OutcomeKey(z, _extend(w, y, yv))
                if target in keys and row[target] != zv:
                    out.append(PrincipleViolation(COMPOSITION, u, ((yk, yv), (zk, zv)), (target, zv), row[target]))
        return out
    if principle == REVERSIBILITY:
        # Y_{w,z} = y & Z_{w,y} = z -> Y_w = y
        for u in units:
            row = R.responses[u]
            for ywz in R.outcomes:
                y = ywz.outcome
                for zname, zval in ywz.intervention:
                    if zname == y:
                        continue
                    w = tuple((a, b) for a, b in ywz.intervention if a != zname)
                    if y in dict(w):
                        continue
                    yval = row[ywz]
                    zwy = OutcomeKey(zname, _extend(w, y, yval))
                    yw = OutcomeKey(y, w)
                    if zwy not in keys or yw not in keys or row[zwy] != zval:
                        continue
                    if row[yw] != yval:
                        out.append(PrincipleViolation(REVERSIBILITY, u, ((ywz, yval), (zwy, zval)), (yw, yval), row[yw]))
        return out
    raise ValueError(f"unknown principle {principle!r}")


# ---------------------------------------------------------------- search


@dataclass(frozen=True)
class SearchConfig:
    max_variables: int = 5
    node_budget: int = 200_000


@dataclass
class SearchStats:
    nodes: int = 0
    prunes: int = 0


@dataclass(frozen=True)
class Obstruction:
    unit: str
    principle: str
    premises: tuple[tuple[OutcomeKey, Value], ...]
    conclusion: tuple[OutcomeKey, Value]
    actual: Value
    note: str = ""

    def __str__(self):
        prem = " & ".join(f"{k}={format_value(v)}" for k, v in self.premises)
        key, val = self.conclusion
        s = (f"{self.principle} at {self.unit}: {prem} -> {key}={format_value(val)}, "
             f"but {key}={format_value(self.actual)}")
        return s + (f" ({self.note})" if self.note else "")


@dataclass
class ExtensionResult:
    found: bool
    full_rcm: Optional[Rcm] = None
    stats: SearchStats = field(default_factory=SearchStats)
    obstruction: Optional[Obstruction] = None
    failed_unit: Optional[str] = None


class _Problem:
    """Ground composition/reversibility rules over the full key set of one signature."""

    def __init__(self, variables: tuple[Variable, ...]):
        self.variables = variables
        self.keys = full_keys(variables)
        self.index = {k: i for i, k in enumerate(self.keys)}
        doms = {v.name: v.domain for v in variables}
        self.domains = [doms[k.outcome] for k in self.keys]
        # composition: (a, y, b, c) means val[a] == y implies val[b] == val[c]
        self.comp: list[tuple[int, Value, int, int]] = []
        # reversibility: (a, y, b, z, c) means val[a] == y and val[b] == z imply val[c] == y
        self.rev: list[tuple[int, Value, int, Value, int]] = []
        names = sorted(doms)
        for w in all_interventions(variables):
            free = [n for n in names if n not in dict(w)]
            for y in free:
                for z in free:
                    if y == z:
                        continue
                    a = self.index[OutcomeKey(y, w)]
                    b = self.index[OutcomeKey(z, w)]
                    for yv in doms[y]:
                        c = self.index[OutcomeKey(z, _extend(w, y, yv))]
                        self.comp.append((a, yv, b, c))
                    for zv in doms[z]:
                        for yv in doms[y]:
                            a2 = self.index[OutcomeKey(y, _extend(w, z, zv))]
                            b2 = self.index[OutcomeKey(z, _extend(w, y, yv))]
                            self.rev.append((a2, yv, b2, zv, a))
        self.watch: list[list[tuple[str, int]]] = [[] for _ in self.keys]
        for r, (a, _, b, c) in enumerate(self.comp):
            for k in {a, b, c}:
                self.watch[k].append(("c", r))
        for r, (a, _, b, _, c) in enumerate(self.rev):
            for k in {a, b, c}:
                self.watch[k].append(("r", r))
        # effectiveness pins every Y_x with Y in x
        self.pinned = {}
        for i, k in enumerate(self.keys):
            do = dict(k.intervention)
            if k.outcome in do:
                self.pinned[i] = do[k.outcome]

    def describe(self, kind: str, r: int, val: list, unit: str, note: str = "") -> Obstruction:
        K = self.keys
        if kind == "c":
            a, yv, b, c = self.comp[r]
            return Obstruction(unit, COMPOSITION, ((K[a], yv), (K[b], val[b])), (K[c], val[b]), val[c], note)
        a, yv, b, zv, c = self.rev[r]
        return Obstruction(unit, REVERSIBILITY, ((K[a], yv), (K[b], zv)), (K[c], yv), val[c], note)


class _Conflict(Exception):
    def __init__(self, kind, rule):
        self.kind, self.rule = kind, rule


class _UnitSearch:
    def __init__(self, prob: _Problem, given: dict[int, Value], config: SearchConfig, stats: SearchStats,
                 unit: str = ""):
        self.p = prob
        self.unit = unit
        self.obstruction: Optional[Obstruction] = None
        self.val: list = [None] * len(prob.keys)
        self.trail: list[int] = []
        self.config = config
        self.stats = stats
        self.last_conflict: Optional[_Conflict] = None
        self.last_obstruction: Optional[Obstruction] = None
        self.given = given

    def _set(self, i: int, v: Value, queue: list):
        cur = self.val[i]
        if cur is None:
            self.val[i] = v
            self.trail.append(i)
            queue.append(i)
            return
        if cur != v:
            raise _Conflict(None, i)

    def assign(self, i: int, v: Value) -> bool:
        """Assign and propagate; on conflict, undo to the entry trail length and return False."""
        mark = len(self.trail)
        queue: list[int] = []
        try:
            self._set(i, v, queue)
            self._propagate(queue)
        except _Conflict as c:
            self.last_conflict = c
            if c.kind is not None:
                note = f"after setting {self.p.keys[i]}={format_value(v)}"
                self.last_obstruction = self.p.describe(c.kind, c.rule, self.val, self.unit, note)
            else:
                self.last_obstruction = None
            self.undo(mark)
            return False
        return True

    def _propagate(self, queue: list[int]):
        val = self.val
        p = self.p
        while queue:
            k = queue.pop()
            for kind, r in p.watch[k]:
                if kind == "c":
                    a, yv, b, c = p.comp[r]
                    if val[a] != yv:
                        continue
                    vb, vc = val[b], val[c]
                    try:
                        if vb is not None and vc is None:
                            self._set(c, vb, queue)
                        elif vc is not None and vb is None:
                            self._set(b, vc, queue)
                        elif vb is not None and vb != vc:
                            raise _Conflict("c", r)
                    except _Conflict as e:
                        raise _Conflict("c", r) from e
                else:
                    a, yv, b, zv, c = p.rev[r]
                    if val[a] != yv or val[b] != zv:
                        continue
                    if val[c] is None:
                        self._set(c, yv, queue)
                    elif val[c] != yv:
                        raise _Conflict("r", r)

    def undo(self, mark: int):
        while len(self.trail) > mark:
            self.val[self.trail.pop()] = None

    def run(self) -> Optional[list]:
        p = self.p
        # place every known value before propagating, so a conflict always names a rule
        queue: list[int] = []
        try:
            for i, v in sorted(self.given.items()) + sorted(p.pinned.items()):
                self._set(i, v, queue)
            self._propagate(queue)
        except _Conflict as c:
            if c.kind is not None:
                self.obstruction = p.describe(c.kind, c.rule, self.val, self.unit, "among the given outcomes")
            return None
        if not self._probe():
            return None
        # chronological backtracking over unassigned keys in canonical order
        stack: list[tuple[int, int, int]] = []  # (key, next value index, trail mark)
        pos = 0
        n = len(p.keys)
        while True:
            while pos < n and self.val[pos] is not None:
                pos += 1
            if pos == n:
                return list(self.val)
            stack.append((pos, 0, len(self.trail)))
            while stack:
                key, vi, mark = stack.pop()
                self.undo(mark)
                dom = p.domains[key]
                placed = False
                while vi < len(dom):
                    self.stats.nodes += 1
                    if self.stats.nodes > self.config.node_budget:
                        raise SearchBudgetExceeded(f"node budget {self.config.node_budget} exhausted")
                    ok = self.assign(key, dom[vi])
                    vi += 1
                    if ok:
                        stack.append((key, vi, mark))
                        placed = True
                        break
                    self.stats.prunes += 1
                if placed:
                    pos = key + 1
                    break
            else:
                self.obstruction = self.last_obstruction
                return None

    def _probe(self) -> bool:
        """Root-level failed-literal probing: a key with no consistent value refutes the unit."""
        changed = True
        while changed:
            changed = False
            for i in range(len(self.p.keys)):
                if self.val[i] is not None:
                    continue
                good, why = [], None
                for v in self.p.domains[i]:
                    mark = len(self.trail)
                    if self.assign(i, v):
                        good.append(v)
                        self.undo(mark)
                    else:
                        self.stats.prunes += 1
                        why = why or self.last_obstruction
                if not good:
                    self.obstruction = why
                    return False
                if len(good) == 1:
                    if not self.assign(i, good[0]):
                        return False
                    changed = True
        return True


def find_full_extension(R: Rcm, config: SearchConfig = SearchConfig()) -> ExtensionResult:
    """Search for a full, principle-respecting extension of every positive-mass unit."""
    if len(R.variables) > config.max_variables:
        raise SearchBudgetExceeded(
            f"{len(R.variables)} variables exceeds the full-extension cap of {config.max_variables}")
    rep = validate_rcm(R)
    if rep.problems:
        raise PreconditionViolated("; ".join(rep.problems))
    if rep.violations:
        raise PreconditionViolated(f"not effective: {rep.violations[0]}")
    prob = _Problem(R.variables)
    stats = SearchStats()
    units = R.positive_units()
    rows: dict[str, dict[OutcomeKey, Value]] = {}
    cache: dict[tuple, Optional[list]] = {}
    for u in units:
        given = {prob.index[k]: R.responses[u][k] for k in R.outcomes}
        sig = tuple(sorted(given.items()))
        if sig not in cache:
            search = _UnitSearch(prob, given, config, stats, u)
            result = search.run()
            if result is None:
                return ExtensionResult(False, None, stats, search.obstruction, u)
            cache[sig] = result
        full = cache[sig]
        rows[u] = dict(zip(prob.keys, full))
    masses = {u: R.mass[u] for u in units}
    full_rcm = Rcm(R.variables, tuple(units), masses, tuple(prob.keys), rows)
    return ExtensionResult(True, full_rcm, stats)


def _full_violations(R: Rcm) -> list[PrincipleViolation]:
    out = []
    for p in PRINCIPLES:
        out.extend(check_principle(R, p))
    return out


def synthesize_scm(R_full: Rcm) -> Scm:
    """Build an SCM with one exogenous unit variable and all-other-variables parents."""
    keys = set(R_full.outcomes)
    missing = [k for k in full_keys(R_full.variables) if k not in keys]
    if missing:
        raise PreconditionViolated(f"not full: {missing[0]} is undefined")
    bad = _full_violations(R_full)
    if bad:
        raise PreconditionViolated(str(bad[0]))
    units = R_full.positive_units()
    if not units:
        raise PreconditionViolated("no positive-mass units")
    total = sum(R_full.mass[u] for u in units)
    U = Variable("U", tuple(units))
    doms = {v.name: v.domain for v in R_full.variables}
    names = sorted(doms)
    mechs = {}
    for v in names:
        others = tuple(n for n in names if n != v)
        table = {}
        for vals in itertools.product(*(doms[o] for o in others)):
            key = OutcomeKey(v, valuation(zip(others, vals)))
            for u in units:
                table[(u,) + vals] = R_full.responses[u][key]
        mechs[v] = Mechanism(("U",), others, table=table)
    exo = {valuation(U=u): R_full.mass[u] / total for u in units}
    return Scm((U,), tuple(R_full.variables), mechs, exo)


def represents(M: Scm, R: Rcm) -> bool:
    """Exact equality of the SCM's counterfactual distribution with the RCM's on R's keys."""
    return cf_distribution_scm(M, R.outcomes) == cf_distribution_rcm(R)


class Representability(NamedTuple):
    representable: bool
    witness: Optional[Scm]


def is_representable(R: Rcm, config: SearchConfig = SearchConfig(), witness: Optional[Scm] = None) -> Representability:
    """Decide representability by search, or certify it with a supplied recursive witness.

    A supplied witness is accepted only if it is uniquely solvable and represents ``R``
    exactly; otherwise the search decides.
    """
    if witness is not None and check_unique_solvability(witness) and represents(witness, R):
        return Representability(True, witness)
    ext = find_full_extension(R, config)
    if not ext.found:
        return Representability(False, None)
    if not ext.full_rcm.units:
        return Representability(True, None)
    M = synthesize_scm(ext.full_rcm)
    return Representability(True, M)
