"""Static type checker for the behavioural layer of service-oriented programs."""

from .ast import enumerate_variables, free_variables
from .checker import Derivation, TypeCheckError, check_behaviour, format_derivation, verify_derivation
from .congruence import apply_rule, congruent, normalize, transport
from .context import lookup_var, member, update_var
from .parser import parse_behaviour, parse_context, pretty_behaviour, pretty_context

__all__ = [
    "Derivation",
    "TypeCheckError",
    "apply_rule",
    "check_behaviour",
    "congruent",
    "enumerate_variables",
    "format_derivation",
    "free_variables",
    "lookup_var",
    "member",
    "normalize",
    "parse_behaviour",
    "parse_context",
    "pretty_behaviour",
    "pretty_context",
    "transport",
    "update_var",
    "verify_derivation",
]
