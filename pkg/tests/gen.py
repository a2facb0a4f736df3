"""Random model generators and brute-force oracles shared by the test suite."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from rcmscm.core import OutcomeKey, Variable, valuation
from rcmscm.lang.ast import Atom, Bin, Not
from rcmscm.model import Mechanism, Rcm, Scm, all_interventions

NAMES = ("A", "B", "C", "D", "E")


def random_masses(rng: random.Random, n: int, zero: bool = True) -> list[Fraction]:
    w = [rng.randint(0 if zero else 1, 5) for _ in range(n)]
    if sum(w) == 0:
        w[rng.randrange(n)] = 1
    return [Fraction(x, sum(w)) for x in w]


def random_variables(rng, max_vars=3, max_dom=3, min_dom=1):
    n = rng.randint(1, max_vars)
    return tuple(Variable(NAMES[i], tuple(range(rng.randint(min_dom, max_dom)))) for i in range(n))


def random_rcm(rng, max_vars=3, max_dom=3, max_units=4, max_interventions=3, effective=True,
               variables=None, zero=True) -> Rcm:
    """Random RCM; each chosen intervention defines a random non-empty set of outcomes."""
    variables = variables or random_variables(rng, max_vars, max_dom)
    doms = {v.name: v.domain for v in variables}
    xs = list(all_interventions(variables))
    chosen = rng.sample(xs, rng.randint(1, min(max_interventions, len(xs))))
    keys = []
    for x in chosen:
        outs = [v.name for v in variables if rng.random() < 0.7] or [rng.choice(variables).name]
        keys += [OutcomeKey(y, x) for y in outs]
    n_units = rng.randint(1, max_units)
    units = [f"u{i}" for i in range(n_units)]
    masses = dict(zip(units, random_masses(rng, n_units, zero)))
    resp = {}
    for u in units:
        row = {}
        for k in keys:
            do = dict(k.intervention)
            if effective and k.outcome in do:
                row[k] = do[k.outcome]
            else:
                row[k] = rng.choice(doms[k.outcome])
        resp[u] = row
    return Rcm.build(variables, masses, resp, keys)


def random_base_formula(rng, keys, doms, depth=3):
    if depth == 0 or rng.random() < 0.3:
        k = rng.choice(keys)
        return Atom(k, rng.choice(doms[k.outcome]))
    r = rng.random()
    if r < 0.2:
        return Not(random_base_formula(rng, keys, doms, depth - 1))
    op = rng.choice(["&", "|", "->", "<->"])
    return Bin(op, random_base_formula(rng, keys, doms, depth - 1), random_base_formula(rng, keys, doms, depth - 1))


def random_scm(rng, n_endo=3, max_dom=2, n_exo=2, exo_dom=2, acyclic=True, parent_p=0.5) -> Scm:
    endo = tuple(Variable(NAMES[i], tuple(range(rng.randint(1, max_dom)))) for i in range(n_endo))
    exo = tuple(Variable(f"U{i}", tuple(range(exo_dom))) for i in range(n_exo))
    mechs = {}
    for i, v in enumerate(endo):
        cands = endo[:i] if acyclic else tuple(w for w in endo if w.name != v.name)
        vp = tuple(w.name for w in cands if rng.random() < parent_p)
        up = tuple(u.name for u in exo if rng.random() < 0.6)
        dom_of = {w.name: w.domain for w in endo}
        inputs = list(itertools.product(*([range(exo_dom)] * len(up) + [dom_of[p] for p in vp])))
        mechs[v.name] = Mechanism(up, vp, table={args: rng.choice(v.domain) for args in inputs})
    exo_vals = list(itertools.product(*(u.domain for u in exo)))
    ms = random_masses(rng, len(exo_vals))
    mass = {valuation(zip([u.name for u in exo], vals)): m for vals, m in zip(exo_vals, ms)}
    return Scm.build(exo, endo, mechs, mass)


# ---------------------------------------------------------------- oracles


def solutions_by_definition(M: Scm, u, x):
    """Every endogenous valuation satisfying all non-intervened equations, by full enumeration."""
    names = [v.name for v in M.endogenous]
    doms = [v.domain for v in M.endogenous]
    x = dict(x)
    out = []
    for vals in itertools.product(*doms):
        v = dict(zip(names, vals))
        if any(v[n] != x[n] for n in x):
            continue
        ok = True
        for n in names:
            if n in x:
                continue
            m = M.mechanisms[n]
            args = tuple(dict(u)[p] for p in m.u_parents) + tuple(v[p] for p in m.v_parents)
            if m.table[args] != v[n]:
                ok = False
                break
        if ok:
            out.append(v)
    return out


def cf_distribution_oracle(M: Scm, keys):
    """Pushforward computed unit by unit from definition-level solutions."""
    acc = {}
    for u, m in M.exo_mass.items():
        if m == 0:
            continue
        row = []
        for k in keys:
            sols = solutions_by_definition(M, u, k.intervention)
            assert len(sols) == 1
            row.append(sols[0][k.outcome])
        acc[tuple(row)] = acc.get(tuple(row), Fraction(0)) + m
    return acc


def achievable_rows(variables):
    """Full response rows realizable by a single-unit SCM with arbitrary endogenous mechanisms.

    Enumerates every mechanism tuple (each variable a function of all others),
    keeps the uniquely solvable ones and records their potential-outcome rows.
    """
    names = [v.name for v in variables]
    doms = {v.name: v.domain for v in variables}
    keys = [OutcomeKey(y, x) for x in all_interventions(variables) for y in names]
    spaces = {n: list(itertools.product(*(doms[o] for o in names if o != n))) for n in names}
    func_choices = {n: list(itertools.product(doms[n], repeat=len(spaces[n]))) for n in names}
    rows = set()
    for combo in itertools.product(*(func_choices[n] for n in names)):
        f = {n: dict(zip(spaces[n], outs)) for n, outs in zip(names, combo)}
        row = []
        ok = True
        cache = {}
        for k in keys:
            x = k.intervention
            if x not in cache:
                xd = dict(x)
                sols = []
                for vals in itertools.product(*(doms[n] for n in names)):
                    v = dict(zip(names, vals))
                    if any(v[n] != xd[n] for n in xd):
                        continue
                    if all(f[n][tuple(v[o] for o in names if o != n)] == v[n] for n in names if n not in xd):
                        sols.append(v)
                if len(sols) != 1:
                    ok = False
                    break
                cache[x] = sols[0]
            row.append(cache[x][k.outcome])
        if ok:
            rows.add(tuple(row))
    return keys, rows


def representable_oracle(R: Rcm, table) -> bool:
    keys, rows = table
    idx = {k: i for i, k in enumerate(keys)}
    for u in R.positive_units():
        want = [(idx[k], R.responses[u][k]) for k in R.outcomes]
        if not any(all(r[i] == v for i, v in want) for r in rows):
            return False
    return True


def dsep_moral(nodes, edges, X, Y, Z) -> bool:
    """d-separation via the moralized ancestral graph."""
    X, Y, Z = set(X), set(Y), set(Z)
    parents = {n: set() for n in nodes}
    for a, b in edges:
        parents[b].add(a)
    anc, stack = set(X | Y | Z), list(X | Y | Z)
    while stack:
        for p in parents[stack.pop()]:
            if p not in anc:
                anc.add(p)
                stack.append(p)
    adj = {n: set() for n in anc}
    for b in anc:
        ps = parents[b] & anc
        for a in ps:
            adj[a].add(b)
            adj[b].add(a)
        for a, c in itertools.combinations(ps, 2):
            adj[a].add(c)
            adj[c].add(a)
    seen, stack = set(X), list(X)
    while stack:
        n = stack.pop()
        if n in Y:
            return False
        for m in adj[n]:
            if m not in seen and m not in Z:
                seen.add(m)
                stack.append(m)
    return True


def random_dsep_query(rng, nodes):
    nodes = list(nodes)
    rng.shuffle(nodes)
    k = len(nodes)
    nx_ = rng.randint(1, max(1, k // 3))
    ny = rng.randint(1, max(1, (k - nx_) // 2))
    X, Y = nodes[:nx_], nodes[nx_:nx_ + ny]
    rest = nodes[nx_ + ny:]
    Z = [n for n in rest if rng.random() < 0.4]
    return X, Y, Z
