"""Command-line interface.

Exit codes: 0 when the report holds, 1 when it fails (violation, not
representable, not separated...), 2 on usage or model errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from . import scenarios
from .abstraction import Translation, is_abstraction, lower
from .core import (
    CausalModelError,
    OutcomeKey,
    format_rational,
    parse_assignments,
    parse_key,
    sorted_keys,
)
from .graphs import (
    CapsExceeded,
    Diagram,
    SchemaCaps,
    build_swig,
    check_instances,
    d_separated,
    generate_cfsep_instances,
    generate_er_instances,
    generate_swsep_instances,
    mixed_d_separated,
    observational,
    verma_functional,
)
from .io import InvariantError, SchemaError, dump, load
from .lang.ast import is_base, is_lformula, keys_of
from .lang.parser import FormulaSyntaxError, parse
from .lang.semantics import encode, eval_formula, eval_term, expand_expectations, holds_pointwise, quantifier
from .model import (
    Rcm,
    Scm,
    cf_distribution_rcm,
    cf_distribution_scm,
    rcm_from_scm,
    validate_rcm,
    validate_scm,
)
from .representability import (
    PRINCIPLES,
    SearchConfig,
    check_principle,
    find_full_extension,
    is_representable,
    synthesize_scm,
)

OK, FAIL, ERROR = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class Workspace:
    """Loaded objects plus the configuration every command shares."""

    models: dict = field(default_factory=dict)
    translations: dict = field(default_factory=dict)
    diagrams: dict = field(default_factory=dict)
    search: SearchConfig = field(default_factory=SearchConfig)
    caps: SchemaCaps = field(default_factory=SchemaCaps)
    include_zero_mass: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("max_variables", "node_budget"):
            if getattr(self.search, name) <= 0:
                raise UsageError(f"{name} must be a positive integer")

    def _load(self, path, store, kinds, what):
        if path not in store:
            obj = load(path, self.params or None)
            if not isinstance(obj, kinds):
                raise UsageError(f"{path} is not {what}")
            store[path] = obj
        return store[path]

    def model(self, path) -> Rcm | Scm:
        return self._load(path, self.models, (Rcm, Scm), "a model")

    def rcm(self, path) -> Rcm:
        m = self.model(path)
        return rcm_from_scm(m) if isinstance(m, Scm) else m

    def translation(self, path) -> Translation:
        return self._load(path, self.translations, Translation, "a translation")

    def diagram(self, path) -> Diagram:
        return self._load(path, self.diagrams, Diagram, "a diagram")


class Report:
    """Text lines plus a structured payload; ``status`` decides the exit code."""

    def __init__(self, status: int = OK):
        self.status = status
        self.lines: list[str] = []
        self.data: dict = {}

    def add(self, *lines: str):
        self.lines.extend(lines)

    def emit(self, fmt: str, out=sys.stdout):
        if fmt == "structured":
            doc = dict(self.data)
            doc["status"] = {OK: "holds", FAIL: "fails"}.get(self.status, "error")
            out.write(json.dumps(doc, indent=1, default=str) + "\n")
        else:
            for line in self.lines:
                out.write(line + "\n")


def _q(x: Optional[Fraction]) -> str:
    return "undefined" if x is None else format_rational(x)


def _yn(b: bool) -> str:
    return "true" if b else "false"


# ---------------------------------------------------------------- commands


def cmd_validate(ws: Workspace, a) -> Report:
    m = ws.model(a.model)
    rep = validate_scm(m) if isinstance(m, Scm) else validate_rcm(m)
    r = Report(OK if rep.ok else FAIL)
    r.add(*rep.lines())
    r.data = dump(m)
    r.data["problems"] = rep.problems
    r.data["violations"] = [str(v) for v in rep.violations]
    return r


def _outcomes(a) -> Optional[list[OutcomeKey]]:
    if not a.outcomes:
        return None
    return sorted_keys({parse_key(k) for k in a.outcomes})


def _distribution(ws: Workspace, path, keys=None):
    m = ws.model(path)
    if isinstance(m, Scm):
        keys = keys or [OutcomeKey.of(v) for v in m.names]
        return cf_distribution_scm(m, keys)
    d = cf_distribution_rcm(m)
    return d.marginalize(keys) if keys else d


def cmd_cfdist(ws, a) -> Report:
    d = _distribution(ws, a.model, _outcomes(a))
    r = Report()
    r.add(*d.lines())
    r.data = {"outcomes": [str(k) for k in d.outcomes],
              "mass": [{**{str(k): v for k, v in zip(d.outcomes, vals)}, "mass": format_rational(m)}
                       for vals, m in d.mass.items()]}
    return r


def _formula_text(arg: str) -> str:
    if arg.startswith("@"):
        with open(arg[1:]) as fh:
            return fh.read().strip()
    return arg


def cmd_eval(ws, a) -> Report:
    m = ws.model(a.model)
    text = _formula_text(a.formula)
    if "E(" in text:
        text = expand_expectations(text, lambda n: next(v.domain for v in _variables(m) if v.name == n))
    node = parse(text)
    keys = keys_of(node)
    d = _distribution(ws, a.model, sorted_keys(set(keys)) if isinstance(m, Scm) else None)
    r = Report()
    if is_base(node):
        q = quantifier(a.quantifier)
        enc = encode(q, node)
        val = eval_formula(d, enc)
        r.status = OK if val else FAIL
        r.add(f"{enc}: {_yn(val)}")
        if isinstance(m, Rcm):
            pw = holds_pointwise(m, node, q, ws.include_zero_mass)
            r.add(f"pointwise {q}: {_yn(pw)}")
        r.add(f"P({node}) = {format_rational(d.probability(node))}")
        r.data = {"formula": str(enc), "holds": val}
    elif is_lformula(node):
        val = eval_formula(d, node)
        r.status = OK if val else FAIL
        r.add(f"{node}: {_yn(val)}")
        r.data = {"formula": str(node), "holds": val}
    else:
        val = eval_term(d, node)
        r.add(f"{node} = {format_rational(val)}")
        r.data = {"term": str(node), "value": format_rational(val)}
    return r


def _variables(m):
    return m.endogenous if isinstance(m, Scm) else m.variables


def cmd_check(ws, a) -> Report:
    R = ws.rcm(a.model)
    r = Report()
    if a.principle == "effectiveness":
        viols = validate_rcm(R).violations
    else:
        viols = check_principle(R, a.principle, ws.include_zero_mass)
    r.status = FAIL if viols else OK
    r.add(f"{a.principle}: {len(viols)} violation(s)")
    r.add(*(f"  {v}" for v in viols))
    r.data = dump(R)
    r.data["principle"] = a.principle
    r.data["violations"] = [str(v) for v in viols]
    return r


def cmd_representable(ws, a) -> Report:
    R = ws.rcm(a.model)
    ext = find_full_extension(R, ws.search)
    r = Report(OK if ext.found else FAIL)
    r.add(f"representable: {_yn(ext.found)}")
    r.add(f"search nodes: {ext.stats.nodes}")
    r.data = {"representable": ext.found, "nodes": ext.stats.nodes}
    if ext.found:
        if ext.full_rcm.units:
            M = synthesize_scm(ext.full_rcm)
            r.data["witness"] = dump(M)
            r.add(f"witness: SCM with {len(M.exogenous[0].domain)} exogenous value(s), all-other-variables parents")
    else:
        r.add(f"obstruction: {ext.obstruction}")
        r.data["obstruction"] = str(ext.obstruction)
    return r


def cmd_abstraction(ws, a) -> Report:
    H, L, t = ws.rcm(a.high), ws.rcm(a.low), ws.translation(a.translation)
    rep = is_abstraction(H, L, t)
    r = Report(OK if rep.holds else FAIL)
    r.add(f"abstraction: {_yn(rep.holds)}")
    if rep.reason:
        r.add(f"reason: {rep.reason}")
    r.data = {"abstraction": rep.holds, "reason": rep.reason}
    return r


def cmd_lower(ws, a) -> Report:
    R = ws.rcm(a.model)
    low = lower(R)
    ab = is_abstraction(R, low.low, low.translation)
    rep = is_representable(low.low, ws.search, witness=low.witness)
    r = Report(OK if ab.holds and rep.representable else FAIL)
    r.add(f"low variables: {' '.join(v.name for v in low.low.variables)}")
    r.add(f"low outcome keys: {len(low.low.outcomes)}")
    r.add(f"abstraction: {_yn(ab.holds)}")
    r.add(f"low model representable: {_yn(rep.representable)}")
    r.data = {"low": dump(low.low), "translation": dump(low.translation), "witness": dump(low.witness),
              "abstraction": ab.holds, "representable": rep.representable}
    if a.out:
        from .io import save
        save(low.low, a.out)
        r.add(f"wrote {a.out}")
    return r


def cmd_swig(ws, a) -> Report:
    D = ws.diagram(a.diagram)
    S = build_swig(D, parse_assignments(a.do or []))
    r = Report()
    r.add(*S.lines())
    r.data = {"random": [str(k) for k in S.random_nodes], "fixed": [str(f) for f in S.fixed_nodes],
              "edges": sorted([str(x), str(y)] for x, y in S.edges)}
    return r


def cmd_dsep(ws, a) -> Report:
    G = ws.diagram(a.diagram)
    X, Y, Z = set(a.x), set(a.y), set(a.z or [])
    sep = mixed_d_separated(G, X, Y, Z) if G.bidirected else d_separated(G, X, Y, Z)
    r = Report(OK if sep else FAIL)
    r.add(f"{{{','.join(sorted(X))}}} _||_ {{{','.join(sorted(Y))}}} | {{{','.join(sorted(Z))}}}: {_yn(sep)}")
    r.data = {"separated": sep}
    return r


def cmd_schema(ws, a) -> Report:
    G = ws.diagram(a.diagram)
    if a.kind == "er":
        inst = generate_er_instances(G, ws.caps)
    elif a.kind == "cfsep":
        inst = generate_cfsep_instances(G, ws.caps)
    else:
        inst = generate_swsep_instances(G, parse_assignments(a.do or []), ws.caps)
    r = Report()
    r.add(f"caps: {ws.caps}")
    r.add(f"{len(inst)} instance(s)")
    shown = inst if a.limit is None else inst[: a.limit]
    r.add(*(str(i.formula) for i in shown))
    r.data = {"caps": vars(ws.caps), "instances": [str(i.formula) for i in shown], "count": len(inst)}
    if a.check:
        n, bad = check_instances(ws.model(a.check), inst)
        r.status = OK if bad is None else FAIL
        r.add(f"checked {n}: {'all hold' if bad is None else 'failure: ' + str(bad.formula)}")
        r.data["failure"] = None if bad is None else str(bad.formula)
    return r


def _instrument_lines(eps: Fraction, ws: Workspace) -> tuple[list[str], bool]:
    R = scenarios.instrument_family(eps)
    vals = scenarios.instrument_report(R)
    ext = find_full_extension(R, ws.search)
    lines = [f"eps = {format_rational(eps)}"]
    lines += [f"{k} = {_q(v)}" for k, v in vals.items()]
    lines.append(f"representable = {_yn(ext.found)}")
    if not ext.found:
        lines.append(f"obstruction: {ext.obstruction}")
    return lines, ext.found


def cmd_demo(ws, a) -> Report:
    r = Report()
    if a.name == "instrument":
        eps = Fraction(a.eps)
        lines, rep = _instrument_lines(eps, ws)
        r.add(*lines)
        r.data = {"lines": lines}
    elif a.name == "late":
        for eps in (Fraction(0), Fraction(1, 8), Fraction(1, 4)):
            R = scenarios.instrument_family(eps)
            d = cf_distribution_rcm(R)
            vals = scenarios.instrument_report(R)
            r.add(f"eps = {format_rational(eps)}")
            for name, zeta in (("monotonicity", scenarios.monotonicity()),
                               ("exclusion restriction", scenarios.exclusion_restriction()),
                               ("outcome decomposition", scenarios.outcome_decomposition())):
                r.add(f"  {name}: {_yn(holds_pointwise(R, zeta, 'forall'))}")
            r.add(f"  ITT1 = {_q(vals['ITT1'])}, ITT2 = {_q(vals['ITT2'])}, LATE = {_q(vals['LATE'])}")
            r.add(f"  LATE = ITT1/ITT2: {_yn(eval_formula(d, scenarios.late_identity()))}")
        r.data = {"lines": r.lines}
    else:
        M = scenarios.verma_scm()
        obs = observational(M)
        for z in (0, 1):
            for y in (0, 1):
                vals = [verma_functional(obs, y, z, x) for x in (0, 1)]
                pyz = cf_distribution_scm(M, [OutcomeKey.of("Y", {"Z": z})]).probability(
                    parse(f"Y[Z={z}]={y}"))
                r.add(f"y={y} z={z}: x=0 -> {_q(vals[0])}, x=1 -> {_q(vals[1])}, P(Y[Z={z}]={y}) = {_q(pyz)}")
                if vals[0] != vals[1] or vals[0] != pyz:
                    r.status = FAIL
        r.data = {"lines": r.lines}
    return r


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rcmscm", description="Finite causal models: check, translate, compile.")
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.add_argument("--param", action="append", default=[], metavar="NAME=VALUE",
                   help="model parameter override, e.g. eps=1/8")
    p.add_argument("--include-zero-mass", action="store_true", help="quantify over zero-mass units too")
    p.add_argument("--max-variables", type=int, default=SearchConfig.max_variables)
    p.add_argument("--node-budget", type=int, default=SearchConfig.node_budget)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate")
    s.add_argument("model")
    s = sub.add_parser("cfdist")
    s.add_argument("model")
    s.add_argument("--outcomes", nargs="+")
    s = sub.add_parser("eval")
    s.add_argument("model")
    s.add_argument("formula", help="formula text or @file")
    s.add_argument("--quantifier", default="forall", help="for base formulas: forall or exists")
    s = sub.add_parser("check")
    s.add_argument("model")
    s.add_argument("--principle", required=True, choices=PRINCIPLES)
    s = sub.add_parser("representable")
    s.add_argument("model")
    s = sub.add_parser("abstraction")
    s.add_argument("high")
    s.add_argument("low")
    s.add_argument("translation")
    s = sub.add_parser("lower")
    s.add_argument("model")
    s.add_argument("--out")
    s = sub.add_parser("swig")
    s.add_argument("diagram")
    s.add_argument("--do", nargs="*", default=[])
    s = sub.add_parser("dsep")
    s.add_argument("diagram")
    s.add_argument("--x", nargs="+", required=True)
    s.add_argument("--y", nargs="+", required=True)
    s.add_argument("--z", nargs="*", default=[])
    s = sub.add_parser("schema")
    s.add_argument("diagram")
    s.add_argument("--kind", required=True, choices=("er", "cfsep", "swsep"))
    s.add_argument("--do", nargs="*", default=[])
    s.add_argument("--check", metavar="MODEL")
    s.add_argument("--limit", type=int)
    s = sub.add_parser("demo")
    s.add_argument("name", choices=("instrument", "late", "verma"))
    s.add_argument("--eps", default="0")
    return p


COMMANDS = {
    "validate": cmd_validate, "cfdist": cmd_cfdist, "eval": cmd_eval, "check": cmd_check,
    "representable": cmd_representable, "abstraction": cmd_abstraction, "lower": cmd_lower,
    "swig": cmd_swig, "dsep": cmd_dsep, "schema": cmd_schema, "demo": cmd_demo,
}


def run(argv: Sequence[str], out=sys.stdout, err=sys.stderr) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(list(argv))
    except SystemExit as e:
        return ERROR if e.code else OK
    try:
        params = {}
        for item in a.param:
            name, sep, val = item.partition("=")
            if not sep:
                raise UsageError(f"--param expects NAME=VALUE, got {item!r}")
            params[name] = val
        ws = Workspace(search=SearchConfig(a.max_variables, a.node_budget), caps=SchemaCaps.from_env(),
                       include_zero_mass=a.include_zero_mass, params=params)
        report = COMMANDS[a.command](ws, a)
    except (UsageError, SchemaError, InvariantError, FormulaSyntaxError, CausalModelError, CapsExceeded,
            ValueError, OSError) as e:
        err.write(f"rcmscm: error: {e}\n")
        return ERROR
    report.emit(a.format, out)
    return report.status


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
