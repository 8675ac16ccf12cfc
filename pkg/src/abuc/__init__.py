"""Attribute-based usage-control policies.

The package is layered bottom-up: ``values`` and ``model`` hold the data
types, ``syntax`` reads and writes the text formats, ``engine`` decides
requests, ``session`` tracks usage over time, ``ratification`` combines
policies from several parties, ``oracle`` checks all of it by brute force
over finite attribute grids and ``recommend`` ranks candidate partners.
"""

from .errors import AbucError
from .model import (
    AttributePredicate,
    Category,
    Condition,
    Decision,
    Effect,
    Lifecycle,
    ObligationSpec,
    Op,
    Outcome,
    Policy,
    PolicyKind,
    Request,
    Right,
    Rule,
    Vocabulary,
)
from .syntax import parse_policy, parse_request, parse_vocabulary, serialize_policy
from .values import Kind, Value, ValueRange

__all__ = [
    "AbucError",
    "AttributePredicate",
    "Category",
    "Condition",
    "Decision",
    "Effect",
    "Kind",
    "Lifecycle",
    "ObligationSpec",
    "Op",
    "Outcome",
    "Policy",
    "PolicyKind",
    "Request",
    "Right",
    "Rule",
    "Value",
    "ValueRange",
    "Vocabulary",
    "parse_policy",
    "parse_request",
    "parse_vocabulary",
    "serialize_policy",
]
