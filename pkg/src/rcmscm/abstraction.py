"""Constructive translations between variable sets and causal abstraction.

A translation partitions the low-level variables into cells, one per high-level
variable (plus a discard cell), and maps each cell's joint values partially and
surjectively onto the high variable's values.  Partial valuations translate
cell by cell: a cell whose consistent defined points all map to one high value
fixes that value; a cell whose consistent points reach every high value leaves
the high variable free; anything in between has no translation.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional

from .core import (
    EMPTY,
    STAR,
    CausalModelError,
    OutcomeKey,
    PreconditionViolated,
    Valuation,
    Value,
    Variable,
    format_valuation,
    sorted_keys,
    valuation,
    valuation_sort_key,
)
from .model import (
    CfDistribution,
    Mechanism,
    Rcm,
    Scm,
    ValidationReport,
    cf_distribution_rcm,
    validate_rcm,
)

DISCARD = "<discard>"


class UndefinedTranslation(CausalModelError):
    pass


@dataclass(frozen=True, eq=False)
class Translation:
    """Cells (low variable to high variable, or ``None`` for discarded) and partial value maps.

    ``value_maps[V]`` maps a valuation of V's cell (canonical tuple form) to a value of V.
    """

    low: tuple[Variable, ...]
    high: tuple[Variable, ...]
    cells: Mapping[str, Optional[str]]
    value_maps: Mapping[str, Mapping[Valuation, Value]]

    def cell(self, high_var: str) -> tuple[str, ...]:
        return tuple(sorted(l for l, h in self.cells.items() if h == high_var))

    def low_domain(self, name: str) -> tuple:
        return next(v.domain for v in self.low if v.name == name)

    def high_domain(self, name: str) -> tuple:
        return next(v.domain for v in self.high if v.name == name)

    @classmethod
    def identity(cls, variables) -> "Translation":
        variables = tuple(variables)
        cells = {v.name: v.name for v in variables}
        maps = {v.name: {((v.name, x),): x for x in v.domain} for v in variables}
        return cls(variables, variables, cells, maps)


def validate_translation(t: Translation) -> ValidationReport:
    rep = ValidationReport()
    low = {v.name: v.domain for v in t.low}
    high = {v.name: v.domain for v in t.high}
    for l in low:
        if l not in t.cells:
            rep.problems.append(f"low variable {l} is in no cell")
    for l, h in t.cells.items():
        if l not in low:
            rep.problems.append(f"cell entry for unknown low variable {l}")
        if h is not None and h not in high:
            rep.problems.append(f"low variable {l} maps to unknown high variable {h}")
    for h, dom in high.items():
        cell = t.cell(h)
        if not cell:
            rep.problems.append(f"high variable {h} has an empty cell")
            continue
        vm = t.value_maps.get(h, {})
        image = set()
        for point, val in vm.items():
            if tuple(n for n, _ in point) != cell:
                rep.problems.append(f"value map of {h} has an entry not over its cell: {format_valuation(point)}")
                continue
            if any(x not in low[n] for n, x in point):
                rep.problems.append(f"value map of {h} uses a value outside a low domain: {format_valuation(point)}")
            if val not in dom:
                rep.problems.append(f"value map of {h} produces {val!r} outside its domain")
            image.add(val)
        missing = [v for v in dom if v not in image]
        if missing:
            rep.problems.append(f"value map of {h} is not surjective: misses {missing}")
    for h in t.value_maps:
        if h not in high:
            rep.problems.append(f"value map for unknown high variable {h}")
    return rep


def translate_valuation(t: Translation, v_low: Mapping[str, Value]) -> Valuation:
    out = {}
    for hv in t.high:
        point = tuple((n, v_low[n]) for n in t.cell(hv.name))
        try:
            out[hv.name] = t.value_maps[hv.name][point]
        except KeyError:
            raise UndefinedTranslation(f"{hv.name} is undefined at {format_valuation(point)}") from None
    return valuation(out)


def _cell_image(t: Translation, hv: str, fixed: Mapping[str, Value], strict: bool):
    """High values reached from defined cell points consistent with ``fixed``.

    Returns None under ``strict`` when some consistent cell point lies outside the
    map's domain of definition.
    """
    cell = t.cell(hv)
    vm = t.value_maps[hv]
    if strict:
        free = [n for n in cell if n not in fixed]
        img = set()
        for vals in itertools.product(*(t.low_domain(n) for n in free)):
            point = dict(fixed)
            point.update(zip(free, vals))
            key = tuple((n, point[n]) for n in cell)
            if key not in vm:
                return None
            img.add(vm[key])
        return img
    return {val for point, val in vm.items() if all(dict(point)[n] == x for n, x in fixed.items())}


def translate_partial(t: Translation, x_low: Mapping[str, Value] | Valuation, strict: bool = False) -> Optional[Valuation]:
    """Translate a partial low-level valuation, or return None when it has no image.

    By default only defined cell points count when forming a cell's image; with
    ``strict`` a touched cell must be defined at every point consistent with it.
    """
    x_low = dict(x_low)
    out = {}
    for hv in t.high:
        cell = t.cell(hv.name)
        fixed = {n: x_low[n] for n in cell if n in x_low}
        if not fixed:
            continue  # untouched: every high value stays reachable by surjectivity
        img = _cell_image(t, hv.name, fixed, strict)
        if img is None or not img:
            return None
        if len(img) == 1:
            out[hv.name] = next(iter(img))
        elif img != set(hv.domain):
            return None
    return valuation(out)


def translate_partial_bruteforce(t: Translation, x_low: Mapping[str, Value]) -> Optional[Valuation]:
    """Reference semantics: the unique x_H whose cylinder equals the image of x_L's cylinder.

    Total low valuations where the translation is undefined are left out of the image.
    Exponential; meant for cross-checking at small scale.
    """
    x_low = dict(x_low)
    free = [v for v in t.low if v.name not in x_low]
    image = set()
    for vals in itertools.product(*(v.domain for v in free)):
        v_low = dict(x_low)
        v_low.update(zip((v.name for v in free), vals))
        try:
            image.add(translate_valuation(t, v_low))
        except UndefinedTranslation:
            pass
    if not image:
        return None
    high = list(t.high)
    # candidate x_H: fix exactly the variables that take one value across the image
    x_h = {}
    for hv in high:
        seen = {dict(v)[hv.name] for v in image}
        if len(seen) == 1 and len(hv.domain) > 1:
            x_h[hv.name] = next(iter(seen))
    free_h = [hv for hv in high if hv.name not in x_h]
    cylinder = set()
    for vals in itertools.product(*(hv.domain for hv in free_h)):
        v = dict(x_h)
        v.update(zip((hv.name for hv in free_h), vals))
        cylinder.add(valuation(v))
    return valuation(x_h) if cylinder == image else None


# ---------------------------------------------------------------- counterfactuals


@dataclass
class CounterfactualTranslationResult:
    defined: bool
    image: Optional[dict[OutcomeKey, Value]] = None
    conflict: Optional[tuple[Valuation, Valuation]] = None
    reason: str = ""

    def __bool__(self):
        return self.defined


def _blocks(o_low: Mapping[OutcomeKey, Value]) -> dict[Valuation, dict[str, Value]]:
    blocks: dict[Valuation, dict[str, Value]] = defaultdict(dict)
    for k, v in o_low.items():
        blocks[k.intervention][k.outcome] = v
    return blocks


def translate_counterfactual(t: Translation, o_low: Mapping[OutcomeKey, Value],
                             outcomes_high) -> CounterfactualTranslationResult:
    """Translate a joint low-level counterfactual block by block.

    Each low intervention block translates to a high intervention and a high
    outcome block.  Blocks landing on the same high intervention must agree.
    Blocks whose outcomes translate to nothing carry no information and are
    skipped.  The merged blocks must cover exactly ``outcomes_high``.
    """
    merged: dict[Valuation, dict[str, Value]] = defaultdict(dict)
    source: dict[tuple[Valuation, str], Valuation] = {}
    blocks = _blocks(o_low)
    for x_low in sorted(blocks, key=valuation_sort_key):
        y_high = translate_partial(t, blocks[x_low])
        if y_high is None:
            return CounterfactualTranslationResult(
                False, reason=f"outcomes under [{format_valuation(x_low)}] have no translation")
        if not y_high:
            continue
        x_high = translate_partial(t, x_low)
        if x_high is None:
            return CounterfactualTranslationResult(
                False, reason=f"intervention [{format_valuation(x_low)}] has no translation")
        for var, val in y_high:
            prev = merged[x_high].get(var)
            if prev is not None and prev != val:
                other = source[(x_high, var)]
                return CounterfactualTranslationResult(
                    False, conflict=(other, x_low),
                    reason=(f"blocks [{format_valuation(other)}] and [{format_valuation(x_low)}] give "
                            f"{var}[{format_valuation(x_high)}] the values {prev} and {val}"))
            merged[x_high][var] = val
            source.setdefault((x_high, var), x_low)
    image = {OutcomeKey(var, x): val for x, blk in merged.items() for var, val in blk.items()}
    wanted = set(outcomes_high)
    missing = wanted - set(image)
    extra = set(image) - wanted
    if missing:
        return CounterfactualTranslationResult(False, reason=f"no low block yields {sorted_keys(missing)[0]}")
    if extra:
        return CounterfactualTranslationResult(False, reason=f"translation yields unrequested {sorted_keys(extra)[0]}")
    return CounterfactualTranslationResult(True, image)


@dataclass
class AbstractionReport:
    holds: bool
    reason: str = ""
    pushforward: Optional[CfDistribution] = None

    def __bool__(self):
        return self.holds


def pushforward(t: Translation, d_low: CfDistribution, outcomes_high) -> CfDistribution:
    """The translated distribution; raises UndefinedTranslation on an untranslatable support point."""
    keys = tuple(sorted_keys(set(outcomes_high)))
    acc: dict[tuple, Fraction] = defaultdict(Fraction)
    for row, m in d_low.support():
        res = translate_counterfactual(t, row, keys)
        if not res.defined:
            raise UndefinedTranslation(res.reason)
        acc[tuple(res.image[k] for k in keys)] += m
    return CfDistribution(keys, dict(acc))


def is_abstraction(H: Rcm, L: Rcm, t: Translation) -> AbstractionReport:
    """Whether translating L's counterfactual distribution gives exactly H's."""
    try:
        pushed = pushforward(t, cf_distribution_rcm(L), H.outcomes)
    except UndefinedTranslation as e:
        return AbstractionReport(False, f"untranslatable support point: {e}")
    target = cf_distribution_rcm(H)
    if pushed != target:
        return AbstractionReport(False, "translated distribution differs from the high-level one", pushed)
    return AbstractionReport(True, "", pushed)


# ---------------------------------------------------------------- lowering


def low_name(var: str, group: int) -> str:
    return f"{var}.{group}"


@dataclass
class Lowering:
    low: Rcm
    translation: Translation
    witness: Scm
    interventions: list[Valuation]  # x^1..x^n, then the empty intervention


def lower(R: Rcm) -> Lowering:
    """A representable low-level RCM that abstracts to ``R`` under a constructive translation.

    Group ``j`` of low variables ``V.j`` carries the outcomes of ``R`` under the
    ``j``-th non-empty intervention; the last group carries the empty-intervention
    outcomes.  Every other low outcome is the padding value ``STAR``.
    """
    rep = validate_rcm(R)
    if rep.problems:
        raise PreconditionViolated("; ".join(rep.problems))
    if rep.violations:
        raise PreconditionViolated(f"not effective: {rep.violations[0]}")
    for v in R.variables:
        # with one value, fixing V and leaving it free translate identically
        if len(v.domain) < 2:
            raise PreconditionViolated(f"lowering needs at least two values per variable; {v.name} has one")
    xs = [x for x in R.interventions() if x != EMPTY]
    n = len(xs)
    groups = xs + [EMPTY]
    Y = [sorted({k.outcome for k in R.outcomes if k.intervention == x}) for x in groups]
    names = R.names
    doms = {v.name: v.domain for v in R.variables}

    low_vars = tuple(Variable(low_name(v, j), doms[v] + (STAR,)) for j in range(1, n + 2) for v in names)
    x_low = [valuation({low_name(a, i): b for a, b in x}) for i, x in enumerate(groups, start=1)]
    empty_low = EMPTY

    # outcome keys and responses
    resp: dict[str, dict[OutcomeKey, Value]] = {u: {} for u in R.units}

    def put(key: OutcomeKey, source: Optional[OutcomeKey]):
        for u in R.units:
            resp[u][key] = R.responses[u][source] if source is not None else STAR

    for i in range(1, n + 1):
        for y in Y[i - 1]:
            put(OutcomeKey(low_name(y, i), x_low[i - 1]), OutcomeKey(y, groups[i - 1]))
            put(OutcomeKey(low_name(y, i), empty_low), None)
            for j in range(1, n + 1):
                if j != i:
                    put(OutcomeKey(low_name(y, i), x_low[j - 1]), None)
    for y in Y[n]:
        put(OutcomeKey(low_name(y, n + 1), empty_low), OutcomeKey(y, EMPTY))
        for i in range(1, n + 1):
            put(OutcomeKey(low_name(y, n + 1), x_low[i - 1]), None)
    keys = set()
    for row in resp.values():
        keys.update(row)
    R_L = Rcm(low_vars, R.units, dict(R.mass), tuple(sorted_keys(keys)), resp)

    # translation: a cell point maps to V's value iff exactly one coordinate is not STAR
    cells = {low_name(v, j): v for j in range(1, n + 2) for v in names}
    maps = {}
    for v in names:
        cell = sorted(low_name(v, j) for j in range(1, n + 2))
        vm = {}
        for c in cell:
            for val in doms[v]:
                vm[tuple((d, val if d == c else STAR) for d in cell)] = val
        maps[v] = vm
    tau = Translation(low_vars, tuple(R.variables), cells, maps)

    witness = _lowering_witness(R, groups, Y, low_vars)
    return Lowering(R_L, tau, witness, groups)


def _lowering_witness(R: Rcm, groups: list[Valuation], Y: list[list[str]], low_vars) -> Scm:
    """A recursive SCM over the low variables that represents the lowered RCM.

    Group ``h`` intervened variables are constant padding; an outcome ``V.h`` reads
    the unit's response under ``x^h`` when every ``X.h`` holds its ``x^h`` value,
    and the last group reads the empty-intervention response when every
    intervened coordinate of the earlier groups is padding.
    """
    n = len(groups) - 1
    units = tuple(R.units)
    U = Variable("U", units)
    mechs: dict[str, Mechanism] = {}
    for v in low_vars:
        mechs[v.name] = Mechanism.constant(STAR)
    table = R.responses

    def group_mech(key: OutcomeKey, parents: tuple[str, ...], wanted: tuple):
        def f(u, *vals):
            return table[u][key] if vals == wanted else STAR
        return Mechanism(("U",), parents, func=f)

    padded = []
    for h in range(1, n + 1):
        x = groups[h - 1]
        parents = tuple(low_name(a, h) for a, _ in x)
        wanted = tuple(b for _, b in x)
        padded.extend(parents)
        for y in Y[h - 1]:
            if y in dict(x):
                continue
            mechs[low_name(y, h)] = group_mech(OutcomeKey(y, x), parents, wanted)
    stars = tuple(STAR for _ in padded)
    for y in Y[n]:
        mechs[low_name(y, n + 1)] = group_mech(OutcomeKey(y, EMPTY), tuple(padded), stars)
    exo = {valuation(U=u): R.mass[u] for u in units}
    return Scm((U,), tuple(low_vars), mechs, exo)


# ---------------------------------------------------------------- submodels


def is_submodel(H_sub: Rcm, H: Rcm) -> bool:
    if H_sub.units != H.units or dict(H_sub.mass) != dict(H.mass):
        return False
    if not set(H_sub.outcomes) <= set(H.outcomes):
        return False
    return all(H_sub.responses[u][k] == H.responses[u][k] for u in H.units for k in H_sub.outcomes)


def restrict_low_level(H: Rcm, H_sub: Rcm, L: Rcm, t: Translation) -> Rcm:
    """Drop from L the outcome keys that translate onto high keys missing from ``H_sub``."""
    if not is_submodel(H_sub, H):
        raise PreconditionViolated("the high-level submodel does not restrict the high-level model")
    if not is_abstraction(H, L, t):
        raise PreconditionViolated("the low-level model does not abstract to the high-level model")
    dropped = set(H.outcomes) - set(H_sub.outcomes)
    keep = []
    for k in L.outcomes:
        hv = t.cells.get(k.outcome)
        x_high = translate_partial(t, k.intervention)
        if hv is not None and x_high is not None and OutcomeKey(hv, x_high) in dropped:
            continue
        keep.append(k)
    return L.restrict(keep)
