"""Definable sets in archimedean ordered abelian groups with small quotients."""

from .model import DENSE, DISCRETE, INF, GroundModel, ModelError, Q, Z, ZP
from .formula import (
    EvaluationError,
    FormulaSyntaxError,
    LinearTerm,
    ScopeError,
    eval_formula,
    format_formula,
    free_vars,
    parse_formula,
    parse_term,
    substitute_params,
)
from .defset import (
    Component,
    DefSet,
    Verdict,
    affine_op,
    boolean_op,
    is_group_definable,
    member,
    min_height_element,
    normalize,
)
from .qe import eliminate_quantifiers, formula_to_defset, qfree_to_defset

__version__ = "0.1.0"
