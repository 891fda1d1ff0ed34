"""Non-recursive Datalog with comparison built-ins."""

from .engine import answers, compare, evaluate
from .parser import parse_program, parse_query, parse_rule, parse_rules
from .syntax import (Builtin, Const, Program, Query, Rel, Rule, Var, base_name, is_external,
                     make_query, normalize, render_program, render_rule)
from .unfold import unfold, unfold_rules

__all__ = [
    "Builtin", "Const", "Program", "Query", "Rel", "Rule", "Var",
    "answers", "base_name", "compare", "evaluate", "is_external", "make_query", "normalize",
    "parse_program", "parse_query", "parse_rule", "parse_rules", "render_program",
    "render_rule", "unfold", "unfold_rules",
]
