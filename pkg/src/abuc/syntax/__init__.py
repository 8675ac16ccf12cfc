"""Concrete syntax: tokenizer, parser and canonical printer."""

from .parser import (
    parse_condition,
    parse_expr,
    parse_grid,
    parse_policy,
    parse_predicate,
    parse_range,
    parse_request,
    parse_vocabulary,
)
from .printer import (
    format_condition,
    format_predicate,
    format_range,
    format_value,
    serialize_policy,
    serialize_request,
)

__all__ = [
    "parse_condition",
    "parse_expr",
    "parse_grid",
    "parse_policy",
    "parse_predicate",
    "parse_range",
    "parse_request",
    "parse_vocabulary",
    "format_condition",
    "format_predicate",
    "format_range",
    "format_value",
    "serialize_policy",
    "serialize_request",
]
