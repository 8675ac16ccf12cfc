"""Canonical serializer.

``parse_policy(serialize_policy(p)) == p`` holds for every policy the parser
can produce.  Output is deterministic: rules come in id order, predicates in
category/attribute order, and each value has exactly one printed form.
"""

from __future__ import annotations

import re
from fractions import Fraction

from ..model import (
    CATEGORY_ORDER,
    AttributePredicate,
    Category,
    Condition,
    Effect,
    Lifecycle,
    ObligationSpec,
    Op,
    Policy,
    Request,
    Rule,
)
from ..values import DAY, HOUR, MINUTE, Interval, Kind, Value, ValueRange
from .lexer import UNITS, WORD_RE

RESERVED = frozenset(
    {"true", "false", "inf", "in", "window", "step", "grid", "rule", "policy", "kind", "request", "trust",
     "enum", "Rt", "Ob", "Rn", "SAT", "OAT", "CNAT"}
) | frozenset(UNITS)

_WORD = re.compile(WORD_RE + r"\Z")
_QUOTE = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t", "\r": "\\r"}


def format_word(s: str) -> str:
    if _WORD.match(s) and s not in RESERVED:
        return s
    return '"' + "".join(_QUOTE.get(c, c) for c in s) + '"'


def format_decimal(x: Fraction) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return f"{x.numerator}.0"
    d = x.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{x.numerator}/{x.denominator}"
    places = max(twos, fives)
    scaled = abs(x.numerator) * (10**places // x.denominator)
    digits = str(scaled).rjust(places + 1, "0")
    sign = "-" if x < 0 else ""
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def format_duration(seconds: int) -> str:
    for unit, name in ((DAY, "days"), (HOUR, "h"), (MINUTE, "min")):
        if seconds and seconds % unit == 0:
            return f"{seconds // unit} {name}"
    return f"{seconds} s"


def format_data(kind: Kind, data: object) -> str:
    if kind is Kind.TEXT:
        return format_word(data)
    if kind is Kind.BOOLEAN:
        return "true" if data else "false"
    if kind is Kind.INTEGER:
        return str(data)
    if kind is Kind.DECIMAL:
        return format_decimal(data)
    if kind is Kind.TIMESTAMP:
        return f"@{data}"
    return format_duration(data)


def format_value(v: Value) -> str:
    return format_data(v.kind, v.data)


def _format_interval(kind: Kind, iv: Interval) -> str:
    lo = "-inf" if iv.lo is None else format_data(kind, iv.lo)
    hi = "inf" if iv.hi is None else format_data(kind, iv.hi)
    return f"{'[' if iv.lo_closed else '('}{lo}, {hi}{']' if iv.hi_closed else ')'}"


def format_range(r: ValueRange) -> str:
    if r.kind.ordered:
        if not r.intervals:
            zero = format_data(r.kind, 0)
            return f"({zero}, {zero})"
        parts = [_format_interval(r.kind, iv) for iv in r.intervals]
        return parts[0] if len(parts) == 1 else "{" + ", ".join(parts) + "}"
    if r.kind is Kind.BOOLEAN and not r.members:
        # an empty set literal would read back as text
        return "~{false, true}"
    body = "{" + ", ".join(format_value(v) for v in sorted(Value(r.kind, m) for m in r.members)) + "}"
    return "~" + body if r.complemented else body


def _annotations(pairs: list[tuple[str, str | None]]) -> str:
    return "".join(f" @{k}={format_word(v)}" for k, v in pairs if v is not None)


def format_predicate(p: AttributePredicate) -> str:
    value = format_range(p.value) if p.op is Op.IN else format_value(p.value)
    lc = p.lifecycle.value if p.lifecycle else None
    text = f"{format_word(p.attr)} {p.op.value} {value}{_annotations([('issuer', p.issuer), ('lc', lc)])}"
    return f"!({text})" if p.negated else text


def format_conjunct(conj: tuple[AttributePredicate, ...]) -> str:
    if not conj:
        return "true"
    groups: dict[Category, list[str]] = {}
    for p in sorted(conj, key=AttributePredicate.sort_key):
        groups.setdefault(p.category, []).append(format_predicate(p))
    return " & ".join(
        f"{cat.value}({' & '.join(groups[cat])})" for cat in sorted(groups, key=CATEGORY_ORDER.__getitem__)
    )


def format_condition(c: Condition) -> str:
    if not c.conjuncts:
        return "false"
    if any(not conj for conj in c.conjuncts):
        return "true"
    parts = [format_conjunct(conj) for conj in c.conjuncts]
    if len(parts) == 1:
        return parts[0]
    return " | ".join(f"({p})" if " & " in p else p for p in parts)


def format_obligation(o: ObligationSpec) -> str:
    text = ("!" if o.negated else "") + format_word(o.action)
    if o.parameters:
        text += "(" + ", ".join(f"{format_word(k)}={format_value(v)}" for k, v in o.parameters) + ")"
    if o.window is not None:
        text += f" window [{format_duration(o.window[0])}, {format_duration(o.window[1])}]"
    return text


def format_rule(rule: Rule, policy_stakeholders: tuple[str, ...] = ()) -> str:
    rights = " & ".join(("!" if r.negated else "") + format_word(r.name) for r in rule.rights)
    head = ("!" if rule.effect is Effect.DENY else "") + f"Rt({rights})"
    if rule.obligations:
        head += " & Ob(" + " & ".join(format_obligation(o) for o in rule.obligations) + ")"
    if rule.restrictions:
        head += " & Rn(" + " & ".join(format_predicate(p) for p in rule.restrictions) + ")"
    ann = ""
    if rule.stakeholders != tuple(policy_stakeholders):
        ann += " @sh=" + ",".join(format_word(s) for s in rule.stakeholders)
    if rule.lifecycle is Lifecycle.EOT:
        ann += " @lc=eot"
    return f"rule {format_word(rule.id)}: {head} <- {format_condition(rule.condition)}{ann};"


def serialize_policy(policy: Policy) -> str:
    sh = ",".join(format_word(s) for s in policy.stakeholders)
    lines = [f"policy {format_word(policy.id)} kind {policy.kind.value} @sh={sh}"]
    lines.extend(format_rule(r, policy.stakeholders) for r in policy.rules)
    return "\n".join(lines) + "\n"


def serialize_request(q: Request) -> str:
    head = f"request @t={q.t}" + _annotations([("sub", q.subject), ("obj", q.object)])
    lines = [head, "Rt(" + ", ".join(format_word(r) for r in sorted(q.demanded_rights)) + ")"]
    groups: dict[Category, list[str]] = {}
    for a in q.assignments:
        groups.setdefault(a.category, []).append(
            f"{format_word(a.attr)} = {format_value(a.value)}{_annotations([('issuer', a.issuer)])}"
        )
    for cat in sorted(groups, key=CATEGORY_ORDER.__getitem__):
        lines.append(f"{cat.value}(" + ", ".join(groups[cat]) + ")")
    if q.promised_obligations:
        lines.append("Ob(" + " & ".join(format_obligation(o) for o in q.promised_obligations) + ")")
    return "\n".join(lines) + "\n"
