"""Causal diagrams, d-separation, SWIGs and the constraint schemas a diagram implies.

Schemas are infinite in general, so generators enumerate instances within
:class:`SchemaCaps`.  Each instance knows its formula in the probability
language and can also be checked quickly against a distribution through cached
marginals; the two routes are cross-checked in the tests.
"""

from __future__ import annotations

import itertools
import os
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Optional, Sequence

from .core import (
    EMPTY,
    CausalModelError,
    OutcomeKey,
    Valuation,
    Value,
    format_value,
    sorted_keys,
    valuation,
)
from .lang.ast import Arith, Atom, Bin, Compare, Lit, Not, Prob, conj
from .model import CfDistribution, Scm, cf_distribution_rcm, cf_distribution_scm

Node = Hashable


class CyclicDiagram(CausalModelError):
    pass


class BidirectedPresent(CausalModelError):
    pass


class CapsExceeded(CausalModelError):
    pass


# ---------------------------------------------------------------- diagrams


@dataclass(frozen=True, eq=False)
class Diagram:
    """Nodes with directed edges ``(a, b)`` meaning ``a -> b`` and unordered bidirected arcs."""

    nodes: tuple
    directed: frozenset = frozenset()
    bidirected: frozenset = frozenset()
    domains: Mapping[Node, tuple] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "directed", frozenset(tuple(e) for e in self.directed))
        object.__setattr__(self, "bidirected", frozenset(frozenset(e) for e in self.bidirected))
        ns = set(self.nodes)
        if len(ns) != len(self.nodes):
            raise ValueError("repeated node")
        for a, b in self.directed:
            if a not in ns or b not in ns:
                raise ValueError(f"edge {a} -> {b} leaves the node set")
            if a == b:
                raise ValueError(f"self-loop at {a}")
        for e in self.bidirected:
            if len(e) != 2:
                raise ValueError("bidirected arcs join two distinct nodes")
            if not e <= ns:
                raise ValueError(f"arc {set(e)} leaves the node set")

    @classmethod
    def of(cls, nodes, directed=(), bidirected=(), domains=None) -> "Diagram":
        return cls(tuple(nodes), frozenset(directed), frozenset(frozenset(e) for e in bidirected), dict(domains or {}))

    def domain(self, node) -> tuple:
        return tuple(self.domains.get(node, (0, 1)))

    def parents(self, v) -> list:
        return sorted((a for a, b in self.directed if b == v), key=str)

    def children(self, v) -> list:
        return sorted((b for a, b in self.directed if a == v), key=str)

    def spouses(self, v) -> list:
        return sorted((next(iter(e - {v})) for e in self.bidirected if v in e), key=str)

    def has_bidirected(self, a, b) -> bool:
        return frozenset((a, b)) in self.bidirected

    def topological_order(self) -> list:
        indeg = {v: 0 for v in self.nodes}
        for _, b in self.directed:
            indeg[b] += 1
        ready = sorted((v for v, d in indeg.items() if d == 0), key=str)
        order = []
        while ready:
            v = ready.pop(0)
            order.append(v)
            for c in self.children(v):
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
                    ready.sort(key=str)
        if len(order) != len(self.nodes):
            raise CyclicDiagram("the directed edges contain a cycle")
        return order

    def is_acyclic(self) -> bool:
        try:
            self.topological_order()
            return True
        except CyclicDiagram:
            return False

    def ancestors(self, v) -> set:
        """Directed ancestors of ``v``, including ``v`` itself."""
        out, stack = {v}, [v]
        while stack:
            for p in self.parents(stack.pop()):
                if p not in out:
                    out.add(p)
                    stack.append(p)
        return out

    def descendants(self, v) -> set:
        out, stack = {v}, [v]
        while stack:
            for c in self.children(stack.pop()):
                if c not in out:
                    out.add(c)
                    stack.append(c)
        return out

    def __eq__(self, other):
        if not isinstance(other, Diagram):
            return NotImplemented
        return (set(self.nodes) == set(other.nodes) and self.directed == other.directed
                and self.bidirected == other.bidirected)

    def __hash__(self):
        return hash((frozenset(self.nodes), self.directed, self.bidirected))

    def lines(self) -> list[str]:
        out = [f"nodes: {' '.join(str(n) for n in self.nodes)}"]
        out += [f"{a} -> {b}" for a, b in sorted(self.directed, key=lambda e: (str(e[0]), str(e[1])))]
        out += [" <-> ".join(sorted(str(x) for x in e)) for e in
                sorted(self.bidirected, key=lambda e: sorted(str(x) for x in e))]
        return out


def _marginal(mass: Mapping[Valuation, Fraction], names: Sequence[str]) -> dict[tuple, Fraction]:
    out: dict[tuple, Fraction] = defaultdict(Fraction)
    for u, m in mass.items():
        d = dict(u)
        out[tuple(d[n] for n in names)] += m
    return out


def _independent(mass, a: Sequence[str], b: Sequence[str]) -> bool:
    pa, pb, pab = _marginal(mass, a), _marginal(mass, b), _marginal(mass, tuple(a) + tuple(b))
    for va, ma in pa.items():
        for vb, mb in pb.items():
            if pab.get(va + vb, Fraction(0)) != ma * mb:
                return False
    return True


def diagram_of(M: Scm) -> Diagram:
    """Directed edges from declared parents; arcs where exogenous parents overlap or are dependent."""
    names = M.names
    directed = {(p, v) for v in names for p in M.mechanisms[v].v_parents}
    bidirected = set()
    for a, b in itertools.combinations(names, 2):
        ua, ub = M.mechanisms[a].u_parents, M.mechanisms[b].u_parents
        if set(ua) & set(ub):
            bidirected.add(frozenset((a, b)))
        elif ua and ub and not _independent(M.exo_mass, ua, ub):
            bidirected.add(frozenset((a, b)))
    doms = {v.name: v.domain for v in M.endogenous}
    return Diagram(tuple(names), frozenset(directed), frozenset(bidirected), doms)


# ---------------------------------------------------------------- d-separation


def _as_set(xs) -> set:
    if isinstance(xs, (set, frozenset, list, tuple)):
        return set(xs)
    return {xs}


def _directed_dsep(nodes, directed, X, Y, Z) -> bool:
    X, Y, Z = _as_set(X), _as_set(Y), _as_set(Z)
    if X & Y:
        return False
    if (X | Y) & Z:
        raise ValueError("conditioning set overlaps the separated sets")
    parents, children = defaultdict(list), defaultdict(list)
    for a, b in directed:
        children[a].append(b)
        parents[b].append(a)
    # a collider is open iff one of its descendants (itself included) is in Z,
    # that is iff it is an ancestor of Z
    open_collider = set(Z)
    stack = list(Z)
    while stack:
        for p in parents[stack.pop()]:
            if p not in open_collider:
                open_collider.add(p)
                stack.append(p)

    def steps(m):
        for c in children[m]:
            yield c, True  # edge m -> c points into c
        for p in parents[m]:
            yield p, False

    # depth-first enumeration of simple paths, cut as soon as a prefix is blocked
    for x in X:
        visited = {x}
        stack = [(x, None, iter(list(steps(x))))]
        while stack:
            m, into_m, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                visited.discard(m)
                continue
            n, into_n = nxt
            if n in visited:
                continue
            if into_m is not None:
                collider = into_m and not into_n  # -> m <- : leaving m against the arrow
                if collider and m not in open_collider:
                    continue
                if not collider and m in Z:
                    continue
            if n in Y:
                return False
            visited.add(n)
            stack.append((n, into_n, iter(list(steps(n)))))
    return True


def d_separated(D, X, Y, Z=()) -> bool:
    """Directed d-separation of node sets ``X`` and ``Y`` given ``Z``."""
    if isinstance(D, Swig):
        D = D.as_diagram()
    if D.bidirected:
        raise BidirectedPresent("use mixed_d_separated for diagrams with bidirected arcs")
    return _directed_dsep(D.nodes, D.directed, X, Y, Z)


def maximal_cliques(nodes: Iterable, edges: Iterable[frozenset]) -> list[frozenset]:
    """Bron-Kerbosch with pivoting."""
    adj = {n: set() for n in nodes}
    for e in edges:
        a, b = tuple(e)
        adj[a].add(b)
        adj[b].add(a)
    out = []

    def bk(r, p, x):
        if not p and not x:
            out.append(frozenset(r))
            return
        pivot = max(p | x, key=lambda n: len(adj[n] & p))
        for v in list(p - adj[pivot]):
            bk(r | {v}, p & adj[v], x & adj[v])
            p = p - {v}
            x = x | {v}

    bk(set(), set(adj), set())
    return sorted(out, key=lambda c: sorted(str(n) for n in c))


@dataclass(frozen=True)
class CliqueNode:
    index: int
    members: frozenset

    def __str__(self):
        return f"<C{self.index}>"


def augmented_directed(G: Diagram) -> Diagram:
    """Directed graph with a fresh parent node for each maximal bidirected clique.

    Cliques of a single node add a root parent that never changes separation, so
    only cliques with at least two members get a node.
    """
    cliques = [c for c in maximal_cliques(G.nodes, G.bidirected) if len(c) >= 2]
    cnodes = [CliqueNode(i, c) for i, c in enumerate(cliques)]
    directed = set(G.directed) | {(c, v) for c in cnodes for v in c.members}
    return Diagram(tuple(G.nodes) + tuple(cnodes), frozenset(directed), frozenset(), dict(G.domains))


def mixed_d_separated(G: Diagram, X, Y, Z=()) -> bool:
    A = augmented_directed(G)
    return _directed_dsep(A.nodes, A.directed, X, Y, Z)


# ---------------------------------------------------------------- SWIGs


@dataclass(frozen=True)
class FixedNode:
    var: str
    value: Value

    def __str__(self):
        return f"{self.var}:={format_value(self.value)}"


@dataclass(frozen=True, eq=False)
class Swig:
    random_nodes: tuple[OutcomeKey, ...]
    fixed_nodes: tuple[FixedNode, ...]
    edges: frozenset
    intervention: Valuation

    def as_diagram(self) -> Diagram:
        return Diagram(self.random_nodes + self.fixed_nodes, self.edges)

    def node_for(self, var: str) -> OutcomeKey:
        return next(k for k in self.random_nodes if k.outcome == var)

    def lines(self) -> list[str]:
        out = [f"random {k}" for k in self.random_nodes]
        out += [f"fixed {f}" for f in self.fixed_nodes]
        out += [f"{a} -> {b}" for a, b in sorted(self.edges, key=lambda e: (str(e[0]), str(e[1])))]
        return out


def build_swig(D: Diagram, x: Mapping[str, Value] | Valuation = EMPTY) -> Swig:
    if D.bidirected:
        raise BidirectedPresent("make latent variables explicit before building a SWIG")
    order = D.topological_order()
    x = dict(x)
    for var in x:
        if var not in D.nodes:
            raise ValueError(f"intervention on unknown node {var}")
    label = {}
    for v in order:
        A = (D.ancestors(v) & set(x)) - {v}
        label[v] = OutcomeKey(v, valuation({a: x[a] for a in A}))
    fixed = {v: FixedNode(v, x[v]) for v in sorted(x)}
    edges = set()
    for a, b in D.directed:
        if a in x:
            edges.add((fixed[a], label[b]))
        else:
            edges.add((label[a], label[b]))
    return Swig(tuple(label[v] for v in order), tuple(fixed.values()), frozenset(edges), valuation(x))


# ---------------------------------------------------------------- schema instances


@dataclass(frozen=True)
class SchemaCaps:
    er_extra: int = 2  # |A| <= |Pa| + er_extra
    max_set_size: int = 2  # per side of an independence
    max_side_vars: int = 3  # both sides of a cf-sep pair together
    max_given: int = 2  # conditioning set size for sw-sep
    max_intervention_size: int = 1  # interventions considered for the FFRCISTG check
    max_instances: int = 500_000

    @classmethod
    def from_env(cls, var: str = "RCMSCM_CAPS") -> "SchemaCaps":
        """Read overrides such as ``er_extra=1,max_set_size=2`` from the environment."""
        raw = os.environ.get(var, "").strip()
        if not raw:
            return cls()
        kw = {}
        for part in raw.split(","):
            name, _, val = part.partition("=")
            name = name.strip()
            if name not in cls.__dataclass_fields__:
                raise ValueError(f"unknown cap {name!r} in {var}")
            kw[name] = int(val)
            if kw[name] < 0:
                raise ValueError(f"cap {name} must be non-negative")
        return cls(**kw)


Conj = tuple  # tuple of (OutcomeKey, value) pairs


def _conj_formula(pairs: Conj):
    return conj(*(Atom(k, v) for k, v in pairs))


def _prob(pairs: Conj):
    return Prob(_conj_formula(pairs)) if pairs else Lit(1)


class Marginals:
    """Cached marginal tables of a distribution, for fast conjunction probabilities."""

    def __init__(self, d: CfDistribution):
        self.d = d
        self.idx = {k: i for i, k in enumerate(d.outcomes)}
        self.cache: dict[tuple, dict[tuple, Fraction]] = {}

    def table(self, keys: tuple) -> dict[tuple, Fraction]:
        t = self.cache.get(keys)
        if t is None:
            pos = [self.idx[k] for k in keys]
            t = defaultdict(Fraction)
            for vals, m in self.d.mass.items():
                t[tuple(vals[i] for i in pos)] += m
            t = dict(t)
            self.cache[keys] = t
        return t

    def p(self, pairs: Conj) -> Fraction:
        if not pairs:
            return Fraction(1)
        keys = tuple(k for k, _ in pairs)
        return self.table(keys).get(tuple(v for _, v in pairs), Fraction(0))


@dataclass(frozen=True)
class ErInstance:
    """``Y_a <-> Y_p`` at value ``y``, with ``p`` the parent part of ``a``."""

    outcome: str
    value: Value
    a: Valuation
    p: Valuation

    @property
    def keys(self) -> tuple[OutcomeKey, OutcomeKey]:
        return OutcomeKey(self.outcome, self.a), OutcomeKey(self.outcome, self.p)

    @property
    def base(self):
        ka, kp = self.keys
        return Bin("<->", Atom(ka, self.value), Atom(kp, self.value))

    @property
    def formula(self) -> Compare:
        # the universally quantified schema, encoded
        return Compare("=", Prob(Not(self.base)), Lit(0))

    def holds(self, marg: Marginals) -> bool:
        ka, kp = self.keys
        if ka == kp:
            return True
        tab = marg.table((ka, kp))
        return all(m == 0 for (va, vp), m in tab.items() if (va == self.value) != (vp == self.value))

    def __str__(self):
        return str(self.base)


@dataclass(frozen=True)
class IndependenceInstance:
    """``P(x & y & z) * P(z) = P(x & z) * P(y & z)`` for conjunctions ``x``, ``y``, ``z``."""

    left: Conj
    right: Conj
    given: Conj = ()

    @property
    def keys(self) -> list[OutcomeKey]:
        return [k for k, _ in self.left + self.right + self.given]

    @property
    def formula(self) -> Compare:
        if not self.given:
            return Compare("=", _prob(self.left + self.right), Arith("*", _prob(self.left), _prob(self.right)))
        lhs = Arith("*", _prob(self.left + self.right + self.given), _prob(self.given))
        rhs = Arith("*", _prob(self.left + self.given), _prob(self.right + self.given))
        return Compare("=", lhs, rhs)

    def holds(self, marg: Marginals) -> bool:
        z = marg.p(self.given)
        return (marg.p(self.left + self.right + self.given) * z
                == marg.p(self.left + self.given) * marg.p(self.right + self.given))

    def __str__(self):
        return str(self.formula)


def _require_acyclic(G: Diagram):
    G.topological_order()


def _subsets(items: Sequence, lo: int, hi: int):
    for r in range(lo, min(hi, len(items)) + 1):
        yield from itertools.combinations(items, r)


class _Counter:
    def __init__(self, caps: SchemaCaps):
        self.n = 0
        self.caps = caps

    def bump(self, k: int = 1):
        self.n += k
        if self.n > self.caps.max_instances:
            raise CapsExceeded(f"more than {self.caps.max_instances} instances; tighten the caps")


def generate_er_instances(G: Diagram, caps: SchemaCaps = SchemaCaps()) -> list[ErInstance]:
    _require_acyclic(G)
    counter = _Counter(caps)
    out = []
    nodes = sorted(G.nodes, key=str)
    for y in nodes:
        pa = G.parents(y)
        others = [v for v in nodes if v != y and v not in pa]
        for extra in _subsets(others, 0, caps.er_extra):
            A = sorted(set(pa) | set(extra), key=str)
            for vals in itertools.product(*(G.domain(v) for v in A)):
                a = valuation(zip(A, vals))
                p = valuation((v, val) for v, val in zip(A, vals) if v in pa)
                for yv in G.domain(y):
                    counter.bump()
                    out.append(ErInstance(y, yv, a, p))
    return out


def _parent_worlds(G: Diagram, v) -> list[Valuation]:
    pa = G.parents(v)
    return [valuation(zip(pa, vals)) for vals in itertools.product(*(G.domain(p) for p in pa))]


def generate_cfsep_instances(G: Diagram, caps: SchemaCaps = SchemaCaps()) -> list[IndependenceInstance]:
    """Product equations for pairs of variable sets with no shared member and no arc across.

    Each variable is read in the world that fixes its parents, and the parent
    values range over every combination.
    """
    _require_acyclic(G)
    counter = _Counter(caps)
    nodes = sorted(G.nodes, key=str)
    out = []
    seen = set()
    for left in _subsets(nodes, 1, caps.max_set_size):
        rest = [v for v in nodes if v not in left]
        for right in _subsets(rest, 1, caps.max_set_size):
            if len(left) + len(right) > caps.max_side_vars:
                continue
            if any(G.has_bidirected(a, b) for a in left for b in right):
                continue
            pair = frozenset((left, right))
            if pair in seen:
                continue
            seen.add(pair)
            lo, hi = sorted((left, right))
            out.extend(_cfsep_values(G, lo, hi, counter))
    return out


def _cfsep_values(G: Diagram, left, right, counter) -> list[IndependenceInstance]:
    def atoms(side):
        choices = []
        for v in side:
            choices.append([(OutcomeKey(v, p), val) for p in _parent_worlds(G, v) for val in G.domain(v)])
        return [tuple(c) for c in itertools.product(*choices)]

    out = []
    for l in atoms(left):
        for r in atoms(right):
            counter.bump()
            out.append(IndependenceInstance(l, r))
    return out


def random_node_values(G: Diagram, key: OutcomeKey) -> tuple:
    return G.domain(key.outcome)


def generate_swsep_instances(D: Diagram, x: Mapping[str, Value] | Valuation = EMPTY,
                             caps: SchemaCaps = SchemaCaps()) -> list[IndependenceInstance]:
    """Conditional independences read off the SWIG by d-separation among random nodes."""
    S = build_swig(D, x)
    counter = _Counter(caps)
    rnodes = list(S.random_nodes)
    edges = S.edges
    nodes = S.random_nodes + S.fixed_nodes
    out = []
    seen = set()
    for Zs in _subsets(rnodes, 0, caps.max_given):
        rest = [n for n in rnodes if n not in Zs]
        for Xs in _subsets(rest, 1, caps.max_set_size):
            rest2 = [n for n in rest if n not in Xs]
            for Ys in _subsets(rest2, 1, caps.max_set_size):
                trip = (frozenset((Xs, Ys)), Zs)
                if trip in seen:
                    continue
                seen.add(trip)
                if not _directed_dsep(nodes, edges, set(Xs), set(Ys), set(Zs)):
                    continue
                lo, hi = sorted((Xs, Ys), key=lambda s: [k.sort_key() for k in s])
                for xv in itertools.product(*(D.domain(k.outcome) for k in lo)):
                    for yv in itertools.product(*(D.domain(k.outcome) for k in hi)):
                        for zv in itertools.product(*(D.domain(k.outcome) for k in Zs)):
                            counter.bump()
                            out.append(IndependenceInstance(tuple(zip(lo, xv)), tuple(zip(hi, yv)), tuple(zip(Zs, zv))))
    return out


def interventions_within(D: Diagram, size: int) -> list[Valuation]:
    nodes = sorted(D.nodes, key=str)
    out = []
    for S in _subsets(nodes, 0, size):
        for vals in itertools.product(*(D.domain(v) for v in S)):
            out.append(valuation(zip(S, vals)))
    return out


# ---------------------------------------------------------------- class membership


@dataclass
class MembershipReport:
    holds: bool
    role: str
    checked: int = 0
    failure: Optional[str] = None
    detail: list[str] = field(default_factory=list)

    def __bool__(self):
        return self.holds

    def lines(self) -> list[str]:
        head = f"{self.role}: {'holds' if self.holds else 'fails'} ({self.checked} instances checked)"
        out = [head] + self.detail
        if self.failure:
            out.append(f"first failure: {self.failure}")
        return out


def distribution_for(model, keys: Iterable[OutcomeKey]) -> CfDistribution:
    keys = set(keys)
    if isinstance(model, Scm):
        return cf_distribution_scm(model, keys)
    missing = keys - set(model.outcomes)
    if missing:
        raise CausalModelError(f"model does not define {sorted_keys(missing)[0]}")
    return cf_distribution_rcm(model).marginalize(sorted_keys(keys))


def check_instances(model, instances: Sequence) -> tuple[int, Optional[object]]:
    """Evaluate instances on the model; returns (count checked, first failing instance)."""
    keys = {k for inst in instances for k in (inst.keys)}
    marg = Marginals(distribution_for(model, keys))
    for i, inst in enumerate(instances):
        if not inst.holds(marg):
            return i + 1, inst
    return len(instances), None


def check_class_membership(model, diagram: Diagram, role: str = "M(G)",
                           caps: SchemaCaps = SchemaCaps()) -> MembershipReport:
    if role in ("M(G)", "scm"):
        if not isinstance(model, Scm):
            raise TypeError("the M(G) role needs an SCM")
        got = diagram_of(model)
        if got == diagram:
            return MembershipReport(True, "M(G)", 1)
        detail = []
        for e in sorted(got.directed ^ diagram.directed, key=str):
            detail.append(f"directed {e[0]} -> {e[1]} {'extra' if e in got.directed else 'missing'}")
        for e in sorted(got.bidirected ^ diagram.bidirected, key=lambda e: sorted(map(str, e))):
            a, b = sorted(map(str, e))
            detail.append(f"bidirected {a} <-> {b} {'extra' if e in got.bidirected else 'missing'}")
        return MembershipReport(False, "M(G)", 1, "diagram differs", detail)
    if role in ("FFRCISTG", "ffrcistg"):
        instances: list = list(generate_er_instances(diagram, caps))
        for x in interventions_within(diagram, caps.max_intervention_size):
            instances.extend(generate_swsep_instances(diagram, x, caps))
        n, bad = check_instances(model, instances)
        return MembershipReport(bad is None, "FFRCISTG", n, None if bad is None else str(bad))
    raise ValueError(f"unknown role {role!r}")


# ---------------------------------------------------------------- random models with a given diagram


def _random_dist(rng, n: int, positive: bool = True) -> list[Fraction]:
    w = [rng.randint(1 if positive else 0, 6) for _ in range(n)]
    if sum(w) == 0:
        w[0] = 1
    return [Fraction(x, sum(w)) for x in w]


def random_scm_with_diagram(G: Diagram, rng, positive: bool = True, exo_size: int = 2) -> Scm:
    """A random SCM whose diagram is exactly ``G``.

    Every node gets a private exogenous parent and every bidirected arc a shared
    one; exogenous variables are independent.  Mechanisms are random tables,
    so some of them ignore a parent; the diagram is still the declared one.
    """
    from .core import Variable
    from .model import Mechanism

    order = G.topological_order()
    urange = tuple(range(exo_size))
    exo = [Variable(f"U_{v}", urange) for v in order]
    arcs = sorted((tuple(sorted(e, key=str)) for e in G.bidirected), key=str)
    exo += [Variable(f"U_{a}{b}", urange) for a, b in arcs]
    u_par = {v: [f"U_{v}"] for v in order}
    for a, b in arcs:
        u_par[a].append(f"U_{a}{b}")
        u_par[b].append(f"U_{a}{b}")
    endo = [Variable(v, G.domain(v)) for v in order]
    mechs = {}
    for v in order:
        pa = G.parents(v)
        spaces = [urange] * len(u_par[v]) + [G.domain(p) for p in pa]
        dom = G.domain(v)
        mechs[v] = Mechanism(tuple(u_par[v]), tuple(pa),
                             table={args: rng.choice(dom) for args in itertools.product(*spaces)})
    marg = {x.name: _random_dist(rng, exo_size, positive) for x in exo}
    mass = {}
    for vals in itertools.product(urange, repeat=len(exo)):
        m = Fraction(1)
        for x, val in zip(exo, vals):
            m *= marg[x.name][val]
        if m:
            mass[valuation((x.name, val) for x, val in zip(exo, vals))] = m
    return Scm.build(exo, endo, mechs, mass)


def random_dag(rng, n: int, p: float = 0.4, names: Sequence[str] | None = None) -> Diagram:
    names = list(names or [f"V{i}" for i in range(n)])
    edges = [(names[i], names[j]) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return Diagram.of(names, edges)


# ---------------------------------------------------------------- the Verma functional


def observational(M: Scm) -> CfDistribution:
    return cf_distribution_scm(M, [OutcomeKey(v, EMPTY) for v in M.names])


def verma_functional(obs: CfDistribution, y: Value, z: Value, x: Value,
                     names=("X", "W", "Z", "Y"), w_domain=(0, 1)) -> Optional[Fraction]:
    """``sum_w P(y | z, w, x) P(w | x)`` on an observational distribution over X, W, Z, Y.

    Returns None when some conditioning event has zero mass.
    """
    X, W, Z, Y = names
    marg = Marginals(obs)
    kx, kw, kz, ky = (OutcomeKey(n, EMPTY) for n in (X, W, Z, Y))
    px = marg.p(((kx, x),))
    if px == 0:
        return None
    total = Fraction(0)
    for w in w_domain:
        pzwx = marg.p(((kx, x), (kw, w), (kz, z)))
        pwx = marg.p(((kx, x), (kw, w)))
        if pzwx == 0:
            return None
        total += marg.p(((kx, x), (kw, w), (kz, z), (ky, y))) / pzwx * (pwx / px)
    return total
