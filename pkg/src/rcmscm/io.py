"""JSON documents for models, translations and diagrams.

Masses are strings such as ``"1/4"``, ``"0.25"`` or affine expressions in named
parameters (``"3/4 - eps"``); parameters get defaults under ``"parameters"``
and can be overridden at load time.  The padding value is written ``"<star>"``.

Model document::

    {"variables": [{"name": "Z", "domain": [0, 1]}, ...],
     "rcm": {"units": [{"name": "u0", "mass": "3/4 - eps"}, ...],
             "outcomes": ["X[Z=1]", ...],
             "responses": {"u0": {"X[Z=1]": 1, ...}, ...}}}

or with ``"scm"`` in place of ``"rcm"``::

    {"exogenous": [{"name": "U", "domain": [0, 1]}],
     "mechanisms": {"W": {"u_parents": ["U"], "v_parents": ["X"],
                          "table": [[u, x, w], ...]}},
     "exo_mass": [{"U": 0, "mass": "1/2"}, ...]}

Translation document: ``"low"`` and ``"high"`` variable lists, ``"cells"``
mapping each high variable to its low variables, an optional ``"discard"`` list,
and ``"maps"``: per high variable a list of ``{"cell": {...}, "value": v}``.

Diagram document: ``"nodes"``, ``"directed"`` pairs, ``"bidirected"`` pairs and
optional ``"domains"``.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping, Optional

from .abstraction import Translation, validate_translation
from .core import (
    STAR,
    STAR_TOKEN,
    CausalModelError,
    OutcomeKey,
    Value,
    Variable,
    format_rational,
    parse_key,
    to_rational,
    valuation,
)
from .graphs import Diagram
from .model import Mechanism, Rcm, Scm, validate_rcm, validate_scm


class SchemaError(CausalModelError):
    def __init__(self, path: str, field: str, message: str):
        self.path, self.field = path, field
        super().__init__(f"{path}: field {field}: {message}")


class InvariantError(CausalModelError):
    def __init__(self, path: str, invariant: str, message: str = ""):
        self.path, self.invariant = path, invariant
        super().__init__(f"{path}: invariant '{invariant}' violated" + (f": {message}" if message else ""))


# ---------------------------------------------------------------- scalars

_TERM_RE = re.compile(r"\s*([+-])?\s*(\d+(?:\.\d+|/\d+)?)?\s*(\*)?\s*([A-Za-z_]\w*)?\s*")


def parse_mass(text, params: Mapping[str, Fraction] | None = None) -> Fraction:
    """Exact value of a number or an affine expression like ``"3/4 - eps"``."""
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    if isinstance(text, float):
        raise ValueError("masses must be strings or integers to stay exact")
    params = params or {}
    s = str(text).strip()
    if not s:
        raise ValueError("empty mass")
    pos, total, first = 0, Fraction(0), True
    while pos < len(s):
        m = _TERM_RE.match(s, pos)
        sign, num, star, name = m.groups()
        if m.end() == pos or (num is None and name is None) or (sign is None and not first):
            raise ValueError(f"cannot read mass {text!r}")
        if star and (num is None or name is None):
            raise ValueError(f"cannot read mass {text!r}")
        if num is not None and name is not None and not star:
            raise ValueError(f"cannot read mass {text!r}")
        coef = to_rational(num) if num is not None else Fraction(1)
        if name is not None:
            if name not in params:
                raise KeyError(name)
            coef *= params[name]
        total += -coef if sign == "-" else coef
        pos, first = m.end(), False
    return total


def _value(raw) -> Value:
    if raw == STAR_TOKEN:
        return STAR
    if isinstance(raw, bool) or not isinstance(raw, (int, str)):
        raise ValueError(f"values are integers or symbols, got {raw!r}")
    return raw


def _dump_value(v: Value):
    return STAR_TOKEN if v is STAR else v


def _variables(raw, path: str, field: str) -> tuple[Variable, ...]:
    if not isinstance(raw, list):
        raise SchemaError(path, field, "expected a list of {name, domain}")
    out, seen = [], set()
    for i, item in enumerate(raw):
        try:
            name, dom = item["name"], [_value(v) for v in item["domain"]]
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaError(path, f"{field}[{i}]", str(e)) from None
        if name in seen:
            raise InvariantError(path, "variable names are unique", name)
        seen.add(name)
        try:
            out.append(Variable(name, tuple(dom)))
        except ValueError as e:
            raise InvariantError(path, "domains are non-empty with distinct values", str(e)) from None
    return tuple(out)


def _key(raw, path, field) -> OutcomeKey:
    try:
        if isinstance(raw, str):
            return parse_key(raw)
        return OutcomeKey(raw["y"], valuation({k: _value(v) for k, v in raw.get("intervention", {}).items()}))
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(path, field, f"bad outcome key {raw!r}: {e}") from None


def _params(doc: Mapping, overrides: Mapping[str, Any] | None, path: str) -> dict[str, Fraction]:
    params = {}
    for k, v in dict(doc.get("parameters", {})).items():
        params[k] = to_rational(v)
    for k, v in dict(overrides or {}).items():
        if k not in params:
            raise SchemaError(path, "parameters", f"unknown parameter {k!r}")
        params[k] = to_rational(v)
    return params


def _mass(raw, params, path, field) -> Fraction:
    try:
        return parse_mass(raw, params)
    except KeyError as e:
        raise SchemaError(path, field, f"unknown parameter {e.args[0]!r}") from None
    except (ValueError, ZeroDivisionError) as e:
        raise SchemaError(path, field, str(e)) from None


# ---------------------------------------------------------------- models


def rcm_from_doc(doc: Mapping, path: str = "<doc>", params: Mapping | None = None) -> Rcm:
    variables = _variables(doc.get("variables"), path, "variables")
    body = doc["rcm"]
    p = _params(doc, params, path)
    units, masses = [], {}
    for i, u in enumerate(body.get("units", [])):
        try:
            name = u["name"]
        except (KeyError, TypeError):
            raise SchemaError(path, f"rcm.units[{i}]", "needs a name") from None
        if name in masses:
            raise InvariantError(path, "unit names are unique", name)
        units.append(name)
        masses[name] = _mass(u.get("mass"), p, path, f"rcm.units[{i}].mass")
    outcomes = [_key(k, path, f"rcm.outcomes[{i}]") for i, k in enumerate(body.get("outcomes", []))]
    raw_resp = body.get("responses", {})
    if not isinstance(raw_resp, Mapping):
        raise SchemaError(path, "rcm.responses", "expected a map from unit to row")
    resp = {}
    for u, row in raw_resp.items():
        if u not in masses:
            raise SchemaError(path, "rcm.responses", f"unknown unit {u!r}")
        try:
            resp[u] = {_key(k, path, f"rcm.responses.{u}"): _value(v) for k, v in row.items()}
        except (AttributeError, ValueError) as e:
            raise SchemaError(path, f"rcm.responses.{u}", str(e)) from None
    if not outcomes:
        outcomes = sorted({k for row in resp.values() for k in row}, key=lambda k: k.sort_key())
    R = Rcm.build(variables, {u: masses[u] for u in units}, resp, outcomes)
    rep = validate_rcm(R)
    if not rep.well_formed:
        raise InvariantError(path, "well-formed RCM", "; ".join(rep.problems))
    return R


def scm_from_doc(doc: Mapping, path: str = "<doc>", params: Mapping | None = None) -> Scm:
    endo = _variables(doc.get("variables"), path, "variables")
    body = doc["scm"]
    exo = _variables(body.get("exogenous"), path, "scm.exogenous")
    p = _params(doc, params, path)
    mechs = {}
    for name, m in dict(body.get("mechanisms", {})).items():
        f = f"scm.mechanisms.{name}"
        try:
            up, vp = tuple(m.get("u_parents", ())), tuple(m.get("v_parents", ()))
            rows = m["table"]
            width = len(up) + len(vp)
            table = {}
            for r in rows:
                if len(r) != width + 1:
                    raise ValueError(f"row {r!r} should have {width + 1} entries")
                table[tuple(_value(v) for v in r[:width])] = _value(r[width])
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise SchemaError(path, f, str(e)) from None
        mechs[name] = Mechanism(up, vp, table=table)
    exo_mass = {}
    exo_names = [u.name for u in exo]
    for i, row in enumerate(body.get("exo_mass", [])):
        try:
            u = valuation({n: _value(row[n]) for n in exo_names})
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaError(path, f"scm.exo_mass[{i}]", f"missing {e}") from None
        if u in exo_mass:
            raise InvariantError(path, "exogenous valuations are listed once", str(dict(u)))
        exo_mass[u] = _mass(row.get("mass"), p, path, f"scm.exo_mass[{i}].mass")
    M = Scm.build(exo, endo, mechs, exo_mass)
    rep = validate_scm(M)
    if not rep.well_formed:
        raise InvariantError(path, "well-formed SCM", "; ".join(rep.problems))
    return M


def rcm_to_doc(R: Rcm) -> dict:
    return {
        "variables": [{"name": v.name, "domain": [_dump_value(x) for x in v.domain]} for v in R.variables],
        "rcm": {
            "units": [{"name": u, "mass": format_rational(R.mass[u])} for u in R.units],
            "outcomes": [str(k) for k in R.outcomes],
            "responses": {u: {str(k): _dump_value(R.responses[u][k]) for k in R.outcomes} for u in R.units},
        },
    }


def scm_to_doc(M: Scm) -> dict:
    doms = {v.name: v.domain for v in M.exogenous + M.endogenous}
    mechs = {}
    for v in M.names:
        m = M.mechanisms[v]
        table = m.to_table(doms)
        mechs[v] = {"u_parents": list(m.u_parents), "v_parents": list(m.v_parents),
                    "table": [[_dump_value(a) for a in args] + [_dump_value(out)] for args, out in table.items()]}
    mass = []
    for u, m in M.exo_mass.items():
        row = {k: _dump_value(x) for k, x in u}
        row["mass"] = format_rational(m)
        mass.append(row)
    return {
        "variables": [{"name": v.name, "domain": [_dump_value(x) for x in v.domain]} for v in M.endogenous],
        "scm": {"exogenous": [{"name": v.name, "domain": [_dump_value(x) for x in v.domain]} for v in M.exogenous],
                "mechanisms": mechs, "exo_mass": mass},
    }


# ---------------------------------------------------------------- translations and diagrams


def translation_from_doc(doc: Mapping, path: str = "<doc>") -> Translation:
    body = doc.get("translation", doc)
    low = _variables(body.get("low"), path, "low")
    high = _variables(body.get("high"), path, "high")
    cells: dict[str, Optional[str]] = {}
    for hv, members in dict(body.get("cells", {})).items():
        for lv in members:
            if lv in cells:
                raise InvariantError(path, "cells partition the low variables", f"{lv} appears twice")
            cells[lv] = hv
    for lv in body.get("discard", []):
        if lv in cells:
            raise InvariantError(path, "cells partition the low variables", f"{lv} appears twice")
        cells[lv] = None
    maps = {}
    for hv, entries in dict(body.get("maps", {})).items():
        mp = {}
        for i, e in enumerate(entries):
            try:
                mp[valuation({k: _value(v) for k, v in e["cell"].items()})] = _value(e["value"])
            except (KeyError, TypeError, ValueError, AttributeError) as err:
                raise SchemaError(path, f"maps.{hv}[{i}]", str(err)) from None
        maps[hv] = mp
    t = Translation(low, high, cells, maps)
    rep = validate_translation(t)
    if not rep.well_formed:
        raise InvariantError(path, "constructive translation", "; ".join(rep.problems))
    return t


def translation_to_doc(t: Translation) -> dict:
    return {"translation": {
        "low": [{"name": v.name, "domain": [_dump_value(x) for x in v.domain]} for v in t.low],
        "high": [{"name": v.name, "domain": [_dump_value(x) for x in v.domain]} for v in t.high],
        "cells": {v.name: list(t.cell(v.name)) for v in t.high},
        "discard": sorted(l for l, h in t.cells.items() if h is None),
        "maps": {hv: [{"cell": {k: _dump_value(x) for k, x in c}, "value": _dump_value(val)}
                      for c, val in mp.items()] for hv, mp in t.value_maps.items()},
    }}


def diagram_from_doc(doc: Mapping, path: str = "<doc>") -> Diagram:
    body = doc.get("diagram", doc)
    try:
        nodes = list(body["nodes"])
        directed = [tuple(e) for e in body.get("directed", [])]
        bidirected = [tuple(e) for e in body.get("bidirected", [])]
        domains = {k: tuple(_value(x) for x in v) for k, v in dict(body.get("domains", {})).items()}
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(path, "diagram", str(e)) from None
    for e in directed + bidirected:
        if len(e) != 2:
            raise SchemaError(path, "diagram", f"edge {list(e)} should have two endpoints")
    try:
        return Diagram.of(nodes, directed, bidirected, domains)
    except ValueError as e:
        raise InvariantError(path, "edge endpoints are nodes and there are no self-loops", str(e)) from None


def diagram_to_doc(G: Diagram) -> dict:
    doc = {"diagram": {
        "nodes": [str(n) for n in G.nodes],
        "directed": sorted([str(a), str(b)] for a, b in G.directed),
        "bidirected": sorted(sorted(str(x) for x in e) for e in G.bidirected),
    }}
    if G.domains:
        doc["diagram"]["domains"] = {k: [_dump_value(x) for x in v] for k, v in G.domains.items()}
    return doc


# ---------------------------------------------------------------- files


def read_json(path) -> dict:
    path = str(path)
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise SchemaError(path, "<document>", f"invalid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise SchemaError(path, "<document>", "expected an object")
    return doc


def document_kind(doc: Mapping) -> str:
    for kind in ("rcm", "scm", "translation", "diagram"):
        if kind in doc:
            return kind
    if "nodes" in doc:
        return "diagram"
    raise SchemaError("<doc>", "<document>", "expected one of rcm, scm, translation, diagram")


def load(path, params: Mapping | None = None):
    """Load and validate any supported document."""
    doc = read_json(path)
    path = str(path)
    try:
        kind = document_kind(doc)
    except SchemaError:
        raise SchemaError(path, "<document>", "expected one of rcm, scm, translation, diagram") from None
    if kind == "rcm":
        return rcm_from_doc(doc, path, params)
    if kind == "scm":
        return scm_from_doc(doc, path, params)
    if kind == "translation":
        return translation_from_doc(doc, path)
    return diagram_from_doc(doc, path)


def load_model(path, params: Mapping | None = None) -> Rcm | Scm:
    obj = load(path, params)
    if not isinstance(obj, (Rcm, Scm)):
        raise SchemaError(str(path), "<document>", "expected a model (rcm or scm)")
    return obj


def dump(obj) -> dict:
    if isinstance(obj, Rcm):
        return rcm_to_doc(obj)
    if isinstance(obj, Scm):
        return scm_to_doc(obj)
    if isinstance(obj, Translation):
        return translation_to_doc(obj)
    if isinstance(obj, Diagram):
        return diagram_to_doc(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def save(obj, path) -> None:
    Path(path).write_text(json.dumps(dump(obj), indent=1) + "\n")
