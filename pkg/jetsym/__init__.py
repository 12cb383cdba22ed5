"""
jetsym

Exact jet-space computations: prolongations of vector fields by the
inductive recursion and by closed formulas, multivariate Faa di Bruno
formulas, Lie's determining equations for symmetries of completely
integrable PDE systems, and the flatness conditions of second order
systems.
"""

__version__ = "1.0.0"
__author__ = "jetsym developers"

from .exceptions import JetsymError
from .faa_di_bruno import CompositionSpec, fdb_closed, fdb_oracle
from .jets import JetContext, PDESystem, total_diff
from .kernel import FormalFraction, Poly, fraction_equal
from .parser import parse_expression, parse_fields, parse_system
from .prolongation import VectorField, prolong_closed, prolong_inductive
from .symmetry import bracket_table, complete_skeleton, determining_system, tangency_defect

__all__ = [
    "JetsymError",
    "JetContext",
    "PDESystem",
    "Poly",
    "FormalFraction",
    "fraction_equal",
    "total_diff",
    "parse_expression",
    "parse_system",
    "parse_fields",
    "VectorField",
    "prolong_inductive",
    "prolong_closed",
    "CompositionSpec",
    "fdb_closed",
    "fdb_oracle",
    "complete_skeleton",
    "tangency_defect",
    "determining_system",
    "bracket_table",
]
