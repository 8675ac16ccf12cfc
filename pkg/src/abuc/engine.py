"""Request evaluation: attribute matching, rule verdicts and deny-override combination."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import KindMismatch
from .model import (
    AttributePredicate,
    Decision,
    Effect,
    ObligationSpec,
    Outcome,
    Policy,
    Request,
    Rule,
    Vocabulary,
    predicate_range,
)
from .values import Value, coerce

LOCAL_ISSUER = "local"
"""Issuer assumed for values and predicates that name none; trusted by every chain."""


class MatchFailure(str, enum.Enum):
    NO_ATTRIBUTE = "NoAttribute"
    UNTRUSTED = "Untrusted"


class VerdictKind(str, enum.Enum):
    MATCHED = "Matched"
    NOT_APPLICABLE = "NotApplicable"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class RuleVerdict:
    """Outcome of matching one rule.

    ``effect`` is the rule's effect for Matched and Indeterminate verdicts,
    which is what deny-override needs to tell the two Indeterminate flavours
    apart.  ``missing`` names the unresolved attributes of an Indeterminate
    verdict.
    """

    rule_id: str
    kind: VerdictKind
    effect: Effect | None = None
    missing: tuple[str, ...] = ()
    conflict: bool = False

    def __post_init__(self) -> None:
        if self.kind is VerdictKind.INDETERMINATE and not self.missing:
            raise ValueError("an Indeterminate verdict must name at least one unresolved predicate")
        if self.kind is not VerdictKind.NOT_APPLICABLE and self.effect is None:
            raise ValueError(f"{self.kind.value} verdicts carry the rule effect")

    @classmethod
    def matched(cls, effect: Effect, rule_id: str = "", conflict: bool = False) -> RuleVerdict:
        return cls(rule_id, VerdictKind.MATCHED, effect, conflict=conflict)

    @classmethod
    def not_applicable(cls, rule_id: str = "") -> RuleVerdict:
        return cls(rule_id, VerdictKind.NOT_APPLICABLE)

    @classmethod
    def indeterminate(cls, effect: Effect, missing: Sequence[str], rule_id: str = "") -> RuleVerdict:
        return cls(rule_id, VerdictKind.INDETERMINATE, effect, tuple(missing))

    def __str__(self) -> str:
        if self.kind is VerdictKind.NOT_APPLICABLE:
            return "NotApplicable"
        return f"{self.kind.value}({self.effect.value})"


def issuers_trusted(i1: str | None, i2: str | None, v: Vocabulary) -> bool:
    i1 = i1 or LOCAL_ISSUER
    i2 = i2 or LOCAL_ISSUER
    if i1 == i2 or LOCAL_ISSUER in (i1, i2):
        return True
    return any(i1 in group and i2 in group for group in v.trust.values())


def attr_match(ar: AttributePredicate, q: Request, v: Vocabulary) -> Value | MatchFailure:
    """The request's value for ``ar``'s attribute, or why there is none."""
    a = q.get(ar.category, ar.attr)
    if a is None:
        return MatchFailure.NO_ATTRIBUTE
    kind = v.entry(ar.category, ar.attr).kind
    try:
        value = coerce(a.value, kind)
    except KindMismatch:
        return MatchFailure.NO_ATTRIBUTE
    if not issuers_trusted(ar.issuer, a.issuer, v):
        return MatchFailure.UNTRUSTED
    return value


def predicate_match(m: AttributePredicate, q: Request, v: Vocabulary) -> bool | None:
    """True, False, or None for Indeterminate (missing or untrusted value)."""
    x = attr_match(m, q, v)
    if isinstance(x, MatchFailure):
        return None
    return x in predicate_range(m, v)


def _label(p: AttributePredicate) -> str:
    return f"{p.category.value}.{p.attr}"


def rule_match(r: Rule, q: Request, v: Vocabulary) -> RuleVerdict:
    if not (r.granted_rights & q.demanded_rights):
        return RuleVerdict.not_applicable(r.id)
    # a restriction contradicted by a value the request does carry rules the rule out;
    # restrictions on attributes the request leaves open are passed on with the decision
    for p in r.restrictions:
        if predicate_match(p, q, v) is False:
            return RuleVerdict.not_applicable(r.id)
    missing: list[str] = []
    for conj in r.condition.conjuncts:
        results = [(p, predicate_match(p, q, v)) for p in conj]
        if any(res is False for _, res in results):
            continue
        unresolved = [_label(p) for p, res in results if res is None]
        if not unresolved:
            return RuleVerdict.matched(r.effect, r.id)
        missing.extend(u for u in unresolved if u not in missing)
    if missing:
        return RuleVerdict.indeterminate(r.effect, missing, r.id)
    return RuleVerdict.not_applicable(r.id)


def _promised_params(o: ObligationSpec) -> dict[str, Value]:
    params = o.params
    if o.window is not None:
        params.setdefault("within", Value.duration(o.window[1]))
    return params


def _outside(p: AttributePredicate, value: Value, v: Vocabulary) -> bool:
    try:
        return value not in predicate_range(p, v)
    except KindMismatch:
        return True


def obligation_conflict(r: Rule, q: Request, v: Vocabulary) -> bool:
    """True when a promised obligation cannot honour the rule's restrictions or obligations."""
    for promised in q.promised_obligations:
        params = _promised_params(promised)
        for p in r.restrictions:
            if p.attr in params and (p.category, p.attr) in v and _outside(p, params[p.attr], v):
                return True
        for required in r.obligations:
            if required.action != promised.action:
                continue
            if required.negated != promised.negated:
                return True
            if required.window is not None and promised.window is not None:
                rs, re_ = required.window
                ps, pe = promised.window
                if ps < rs or pe > re_:
                    return True
            rp = required.params
            for name, value in promised.params.items():
                if name in rp and rp[name] != value:
                    return True
    return False


def combine(verdicts: Iterable[RuleVerdict], epsilon: Effect = Effect.DENY) -> Outcome:
    """Deny-override combination.

    The overriding effect wins outright when matched.  An unresolved rule of
    that effect could still have fired, so it makes the result
    Indeterminate.  Otherwise a matched rule of the other effect decides,
    and remaining unresolved rules give Indeterminate.
    """
    vs = list(verdicts)
    eps_bar = epsilon.flipped()

    def has(kind: VerdictKind, effect: Effect) -> bool:
        return any(x.kind is kind and x.effect is effect for x in vs)

    if has(VerdictKind.MATCHED, epsilon):
        return Outcome(epsilon.value)
    if has(VerdictKind.INDETERMINATE, epsilon):
        return Outcome.INDETERMINATE
    if has(VerdictKind.MATCHED, eps_bar):
        return Outcome(eps_bar.value)
    if any(x.kind is VerdictKind.INDETERMINATE for x in vs):
        return Outcome.INDETERMINATE
    return Outcome.NOT_APPLICABLE


def check_resolves(p: Policy, q: Request, v: Vocabulary) -> None:
    """Raise ``UnknownAttribute`` for any policy or request attribute missing from ``v``."""
    for cat, attr in sorted(p.attributes(), key=lambda k: (k[0].value, k[1])):
        v.entry(cat, attr)
    for a in q.assignments:
        v.entry(a.category, a.attr)


def verdicts(p: Policy, q: Request, v: Vocabulary) -> list[RuleVerdict]:
    out = []
    for rule in p.rules:
        verdict = rule_match(rule, q, v)
        if verdict.kind is VerdictKind.MATCHED and verdict.effect is Effect.PERMIT and obligation_conflict(rule, q, v):
            verdict = RuleVerdict.matched(Effect.DENY, rule.id, conflict=True)
        out.append(verdict)
    return out


def evaluate(p: Policy, q: Request, v: Vocabulary, flatten: bool = False) -> Decision:
    check_resolves(p, q, v)
    vs = verdicts(p, q, v)
    outcome = combine(vs)
    granted: set[str] = set()
    obligations: list[ObligationSpec] = []
    restrictions: list[AttributePredicate] = []
    if outcome is Outcome.PERMIT:
        by_id = {r.id: r for r in p.rules}
        for verdict in vs:
            if verdict.kind is VerdictKind.MATCHED and verdict.effect is Effect.PERMIT:
                rule = by_id[verdict.rule_id]
                granted |= rule.granted_rights & q.demanded_rights
                obligations.extend(o for o in rule.obligations if o not in obligations)
                restrictions.extend(x for x in rule.restrictions if x not in restrictions)
    if flatten and outcome is not Outcome.PERMIT:
        outcome = Outcome.DENY
    return Decision(
        outcome=outcome,
        granted_rights=frozenset(granted),
        obligations=tuple(obligations),
        restrictions=tuple(restrictions),
        decision_time=q.t,
        trace=tuple(vs),
        demanded_rights=q.demanded_rights,
    )


__all__ = [
    "LOCAL_ISSUER",
    "MatchFailure",
    "RuleVerdict",
    "VerdictKind",
    "attr_match",
    "combine",
    "evaluate",
    "issuers_trusted",
    "obligation_conflict",
    "predicate_match",
    "rule_match",
    "verdicts",
]
