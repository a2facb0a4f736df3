from .ast import Arith, Atom, Bin, Compare, Lit, Neg, Not, Prob, atom, conj, disj, is_base, is_lformula, is_term
from .parser import FormulaSyntaxError, parse, parse_base, parse_formula
from .semantics import (
    EXISTS,
    FORALL,
    encode,
    eval_base,
    eval_formula,
    eval_term,
    expand_expectations,
    expectation,
    holds_pointwise,
)
