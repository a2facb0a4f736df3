"""Shared value types: exact rationals, variables, valuations and outcome keys."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Tuple

Value = Hashable
Valuation = Tuple[Tuple[str, Value], ...]


class _Star:
    """Padding value that lies outside every declared domain."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "<star>"

    def __reduce__(self):
        return (_Star, ())


STAR = _Star()
STAR_TOKEN = "<star>"


class CausalModelError(Exception):
    """Base class for errors raised by this package."""


class UnknownOutcomeKey(CausalModelError, KeyError):
    def __init__(self, key):
        super().__init__(key)
        self.key = key

    def __str__(self):
        return f"unknown outcome key {self.key}"


class NonUniqueSolution(CausalModelError):
    def __init__(self, u, x, count):
        self.u, self.x, self.count = u, x, count
        super().__init__(
            f"{count} solutions for exogenous {format_valuation(u)} under do({format_valuation(x)})"
        )


class PreconditionViolated(CausalModelError):
    pass


class SearchBudgetExceeded(CausalModelError):
    pass


def to_rational(value) -> Fraction:
    """Convert an int, Fraction or string such as "3/4" or "0.25" exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not probabilities")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # floats are accepted only through their shortest decimal repr
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot read {value!r} as a rational")


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def value_order(v: Value):
    """Total order across the value kinds we allow (ints, strings, STAR)."""
    if v is STAR:
        return (2, 0, "")
    if isinstance(v, int):
        return (0, v, "")
    return (1, 0, str(v))


def format_value(v: Value) -> str:
    return STAR_TOKEN if v is STAR else str(v)


def valuation(mapping: Mapping[str, Value] | Iterable[tuple[str, Value]] = (), **kw) -> Valuation:
    """Canonical (name-sorted) tuple form of a partial valuation."""
    items = dict(mapping)
    items.update(kw)
    return tuple(sorted(items.items(), key=lambda kv: kv[0]))


EMPTY: Valuation = ()


def format_valuation(v: Valuation) -> str:
    return ",".join(f"{k}={format_value(val)}" for k, val in v)


def valuation_sort_key(v: Valuation):
    return (len(v), tuple(k for k, _ in v), tuple(value_order(x) for _, x in v))


@dataclass(frozen=True)
class Variable:
    name: str
    domain: tuple

    def __post_init__(self):
        object.__setattr__(self, "domain", tuple(self.domain))
        if not self.domain:
            raise ValueError(f"variable {self.name} has an empty domain")
        if len(set(self.domain)) != len(self.domain):
            raise ValueError(f"variable {self.name} has repeated domain values")


@dataclass(frozen=True)
class OutcomeKey:
    """A potential outcome ``Y_x``: variable ``outcome`` under intervention ``intervention``."""

    outcome: str
    intervention: Valuation = EMPTY

    @classmethod
    def of(cls, outcome: str, intervention: Mapping[str, Value] | None = None, **kw) -> "OutcomeKey":
        return cls(outcome, valuation(intervention or {}, **kw))

    @property
    def do(self) -> dict:
        return dict(self.intervention)

    def sort_key(self):
        return valuation_sort_key(self.intervention) + (self.outcome,)

    def __str__(self):
        return f"{self.outcome}[{format_valuation(self.intervention)}]"


def sorted_keys(keys: Iterable[OutcomeKey]) -> list[OutcomeKey]:
    return sorted(keys, key=OutcomeKey.sort_key)


_KEY_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_.']*)\s*(?:\[(.*)\])?\s*$")


def parse_value(token: str) -> Value:
    token = token.strip()
    if token == STAR_TOKEN:
        return STAR
    if re.fullmatch(r"-?\d+", token):
        return int(token)
    return token


def parse_key(text: str) -> OutcomeKey:
    """Parse ``"Y[X=1,Z=0]"`` (or a bare ``"Y"``) into an OutcomeKey."""
    m = _KEY_RE.match(text)
    if not m:
        raise ValueError(f"malformed outcome key {text!r}")
    name, inner = m.group(1), m.group(2)
    do = {}
    if inner and inner.strip():
        for part in inner.split(","):
            var, _, val = part.partition("=")
            if not _:
                raise ValueError(f"malformed intervention {part!r} in {text!r}")
            do[var.strip()] = parse_value(val)
    return OutcomeKey.of(name, do)


def parse_assignments(parts: Iterable[str]) -> Valuation:
    """Parse CLI-style ``W=1`` tokens (comma or space separated) into a valuation."""
    do = {}
    for chunk in parts:
        for part in chunk.split(","):
            if not part.strip():
                continue
            var, eq, val = part.partition("=")
            if not eq:
                raise ValueError(f"expected NAME=VALUE, got {part!r}")
            do[var.strip()] = parse_value(val)
    return valuation(do)
