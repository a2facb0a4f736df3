"""Finite causal models: potential outcomes, structural equations, abstraction and graphs."""

from .core import (
    EMPTY,
    STAR,
    CausalModelError,
    NonUniqueSolution,
    OutcomeKey,
    PreconditionViolated,
    SearchBudgetExceeded,
    UnknownOutcomeKey,
    Variable,
    parse_key,
    valuation,
)
from .model import (
    CfDistribution,
    Mechanism,
    Rcm,
    Scm,
    cf_distribution_rcm,
    cf_distribution_scm,
    check_unique_solvability,
    query_probability,
    rcm_from_scm,
    solve_scm,
    validate_rcm,
    validate_scm,
)
from .representability import (
    COMPOSITION,
    EFFECTIVENESS,
    REVERSIBILITY,
    SearchConfig,
    check_principle,
    find_full_extension,
    is_representable,
    represents,
    synthesize_scm,
)
from .abstraction import (
    Translation,
    is_abstraction,
    lower,
    restrict_low_level,
    translate_counterfactual,
    translate_partial,
)
from .lang import encode, eval_formula, eval_term, holds_pointwise, parse
from .graphs import (
    Diagram,
    SchemaCaps,
    build_swig,
    check_class_membership,
    d_separated,
    diagram_of,
    generate_cfsep_instances,
    generate_er_instances,
    generate_swsep_instances,
    mixed_d_separated,
)
from .io import InvariantError, SchemaError, load, save
