"""Domain types of the usage-control policy language.

Everything here is immutable.  Collections that carry no meaningful order
(rights, obligations, restrictions, stakeholders, rules) are stored as sorted
tuples so that structurally equal policies compare equal and serialize to the
same bytes.
"""

from __future__ import annotations

import enum
import functools
import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Mapping, Union

from .errors import DuplicateAssignment, DuplicateRuleId, KindMismatch, UnknownAttribute
from .values import Kind, Value, ValueRange, coerce


class Category(str, enum.Enum):
    SAT = "SAT"
    OAT = "OAT"
    CNAT = "CNAT"


CATEGORY_ORDER = {Category.SAT: 0, Category.OAT: 1, Category.CNAT: 2}


class Op(str, enum.Enum):
    EQ = "="
    NE = "!="
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="
    IN = "in"

    @property
    def ordering(self) -> bool:
        return self in (Op.LT, Op.LE, Op.GT, Op.GE)


class Effect(str, enum.Enum):
    PERMIT = "Permit"
    DENY = "Deny"

    def flipped(self) -> Effect:
        return Effect.DENY if self is Effect.PERMIT else Effect.PERMIT


class Outcome(str, enum.Enum):
    PERMIT = "Permit"
    DENY = "Deny"
    NOT_APPLICABLE = "NotApplicable"
    INDETERMINATE = "Indeterminate"


class Lifecycle(str, enum.Enum):
    DP = "dp"
    EOT = "eot"


class PolicyKind(str, enum.Enum):
    ROP = "RoP"
    QOP = "QoP"
    CSP = "CSP"


AttrKey = tuple  # (Category, attribute name)


@dataclass(frozen=True)
class AttributePredicate:
    category: Category
    attr: str
    op: Op
    value: Union[Value, ValueRange]
    negated: bool = False
    issuer: str | None = None
    lifecycle: Lifecycle | None = None

    def __post_init__(self) -> None:
        if self.op is Op.IN:
            if not isinstance(self.value, ValueRange):
                raise TypeError("'in' predicates take a ValueRange")
        else:
            if not isinstance(self.value, Value):
                raise TypeError(f"'{self.op.value}' predicates take a single Value")
            if self.op.ordering and not self.value.kind.ordered:
                raise KindMismatch(
                    f"operator {self.op.value} needs an ordered kind, {self.attr} compares {self.value.kind.value}"
                )

    @property
    def key(self) -> AttrKey:
        return (self.category, self.attr)

    @property
    def kind(self) -> Kind:
        return self.value.kind

    def sort_key(self) -> tuple:
        return (CATEGORY_ORDER[self.category], self.attr, self.op.value, self.negated, repr(self.value),
                self.issuer or "", self.lifecycle.value if self.lifecycle else "")

    def negate(self) -> AttributePredicate:
        return replace(self, negated=not self.negated)


# -- raw condition expressions (parser output, input to to_dnf) ------------------


@dataclass(frozen=True)
class Pred:
    predicate: AttributePredicate


@dataclass(frozen=True)
class And:
    items: tuple


@dataclass(frozen=True)
class Or:
    items: tuple


@dataclass(frozen=True)
class Not:
    item: object


@dataclass(frozen=True)
class Const:
    value: bool


Expr = Union[Pred, And, Or, Not, Const]


@dataclass(frozen=True)
class Condition:
    """A condition in disjunctive normal form.

    ``conjuncts`` is empty exactly when the condition is unsatisfiable; a
    single empty conjunct is the always-true condition.
    """

    conjuncts: tuple[tuple[AttributePredicate, ...], ...] = ((),)

    @property
    def satisfiable(self) -> bool:
        return bool(self.conjuncts)

    @classmethod
    def true(cls) -> Condition:
        return cls(((),))

    @classmethod
    def false(cls) -> Condition:
        return cls(())

    def predicates(self) -> Iterator[AttributePredicate]:
        for conj in self.conjuncts:
            yield from conj


@dataclass(frozen=True)
class Right:
    name: str
    negated: bool = False


@dataclass(frozen=True)
class ObligationSpec:
    action: str
    parameters: tuple[tuple[str, Value], ...] = ()
    window: tuple[int, int] | None = None
    negated: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "parameters", tuple(sorted(dict(self.parameters).items())))
        if self.window is not None:
            ts, te = self.window
            if ts < 0 or ts > te:
                raise ValueError(f"obligation window must satisfy 0 <= t_s <= t_e, got {self.window}")

    @property
    def params(self) -> dict[str, Value]:
        return dict(self.parameters)

    def sort_key(self) -> tuple:
        return (self.action, self.negated, repr(self.parameters), self.window or (-1, -1))


def _sorted_unique(items: Iterable, key=None) -> tuple:
    seen = []
    for it in items:
        if it not in seen:
            seen.append(it)
    return tuple(sorted(seen, key=key))


@dataclass(frozen=True)
class Rule:
    id: str
    effect: Effect
    rights: tuple[Right, ...]
    condition: Condition = field(default_factory=Condition.true)
    obligations: tuple[ObligationSpec, ...] = ()
    restrictions: tuple[AttributePredicate, ...] = ()
    lifecycle: Lifecycle = Lifecycle.DP
    stakeholders: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.rights:
            raise ValueError(f"rule {self.id}: rights set must be non-empty")
        for p in self.restrictions:
            if p.category is not Category.CNAT:
                raise ValueError(f"rule {self.id}: restriction on {p.attr} must be a CNAT predicate")
        object.__setattr__(self, "rights", _sorted_unique(self.rights, key=lambda r: (r.name, r.negated)))
        object.__setattr__(self, "obligations", _sorted_unique(self.obligations, key=ObligationSpec.sort_key))
        object.__setattr__(self, "restrictions", _sorted_unique(self.restrictions, key=AttributePredicate.sort_key))
        object.__setattr__(self, "stakeholders", tuple(sorted(set(self.stakeholders))))

    @property
    def granted_rights(self) -> frozenset[str]:
        """Rights the rule speaks about; negated entries are excluded."""
        excluded = {r.name for r in self.rights if r.negated}
        return frozenset(r.name for r in self.rights if not r.negated and r.name not in excluded)

    def attributes(self) -> set[AttrKey]:
        keys = {p.key for p in self.condition.predicates()}
        keys.update(p.key for p in self.restrictions)
        return keys


@dataclass(frozen=True)
class Policy:
    id: str
    kind: PolicyKind
    stakeholders: tuple[str, ...]
    rules: tuple[Rule, ...] = ()

    def __post_init__(self) -> None:
        if not self.stakeholders:
            raise ValueError(f"policy {self.id}: at least one stakeholder is required")
        object.__setattr__(self, "stakeholders", tuple(sorted(set(self.stakeholders))))
        # a rule with no stakeholders of its own belongs to the policy's
        rules = tuple(r if r.stakeholders else replace(r, stakeholders=self.stakeholders) for r in self.rules)
        object.__setattr__(self, "rules", rules)
        ids = [r.id for r in self.rules]
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        if dupes:
            raise DuplicateRuleId(f"policy {self.id}: duplicate rule id(s) {', '.join(dupes)}")
        # evaluation is order-independent under deny-override; keep a canonical order
        object.__setattr__(self, "rules", tuple(sorted(self.rules, key=lambda r: r.id)))

    @property
    def combinator(self) -> str:
        return "deny-overrides"

    def attributes(self) -> set[AttrKey]:
        keys: set[AttrKey] = set()
        for r in self.rules:
            keys |= r.attributes()
        return keys

    def rights(self) -> set[str]:
        return {r.name for rule in self.rules for r in rule.rights}

    def permit_rules(self) -> list[Rule]:
        return [r for r in self.rules if r.effect is Effect.PERMIT]

    def deny_rules(self) -> list[Rule]:
        return [r for r in self.rules if r.effect is Effect.DENY]


@dataclass(frozen=True)
class AttributeEntry:
    kind: Kind
    domain: ValueRange
    grid: tuple[Value, ...] | None = None

    def enumeration(self) -> tuple[Value, ...] | None:
        """Finite sample of the domain: the declared grid, else the domain itself if finite."""
        if self.grid is not None:
            return tuple(g for g in self.grid if g in self.domain)
        if self.domain.is_finite():
            return tuple(self.domain.values())
        return None


@dataclass(frozen=True, eq=False)
class Vocabulary:
    """Attribute declarations plus the issuer trust registry.

    Compared and hashed by identity so it can key evaluation caches.
    """

    entries: Mapping[AttrKey, AttributeEntry] = field(default_factory=dict)
    trust: Mapping[str, frozenset[str]] = field(default_factory=dict)

    def entry(self, category: Category, attr: str) -> AttributeEntry:
        try:
            return self.entries[(category, attr)]
        except KeyError:
            raise UnknownAttribute(f"attribute {category.value}.{attr} is not declared in the vocabulary") from None

    def __contains__(self, key: AttrKey) -> bool:
        return key in self.entries

    def keys(self) -> list[AttrKey]:
        return sorted(self.entries, key=lambda k: (CATEGORY_ORDER[k[0]], k[1]))


@dataclass(frozen=True)
class Assignment:
    category: Category
    attr: str
    value: Value
    issuer: str | None = None

    @property
    def key(self) -> AttrKey:
        return (self.category, self.attr)


@dataclass(frozen=True)
class Request:
    assignments: tuple[Assignment, ...]
    demanded_rights: frozenset[str]
    promised_obligations: tuple[ObligationSpec, ...] = ()
    t: int = 0
    subject: str | None = None
    object: str | None = None

    def __post_init__(self) -> None:
        seen = set()
        for a in self.assignments:
            if a.key in seen:
                raise DuplicateAssignment(f"attribute {a.category.value}.{a.attr} assigned more than once")
            seen.add(a.key)
        object.__setattr__(
            self, "assignments",
            tuple(sorted(self.assignments, key=lambda a: (CATEGORY_ORDER[a.category], a.attr))),
        )
        object.__setattr__(self, "demanded_rights", frozenset(self.demanded_rights))
        object.__setattr__(
            self, "promised_obligations",
            _sorted_unique(self.promised_obligations, key=ObligationSpec.sort_key),
        )

    @functools.cached_property
    def by_key(self) -> dict[AttrKey, Assignment]:
        return {a.key: a for a in self.assignments}

    def get(self, category: Category, attr: str) -> Assignment | None:
        return self.by_key.get((category, attr))

    def with_assignments(self, extra: Iterable[Assignment]) -> Request:
        """Return a copy where ``extra`` replaces any assignment with the same key."""
        merged = dict(self.by_key)
        for a in extra:
            merged[a.key] = a
        return replace(self, assignments=tuple(merged.values()))


@dataclass(frozen=True)
class Decision:
    outcome: Outcome
    granted_rights: frozenset[str] = frozenset()
    obligations: tuple[ObligationSpec, ...] = ()
    restrictions: tuple[AttributePredicate, ...] = ()
    decision_time: int = 0
    trace: tuple = ()
    demanded_rights: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if bool(self.granted_rights) != (self.outcome is Outcome.PERMIT):
            raise ValueError("granted rights must be non-empty exactly when the outcome is Permit")

    def flattened(self) -> Outcome:
        return Outcome.PERMIT if self.outcome is Outcome.PERMIT else Outcome.DENY


# -- denotation of predicates ------------------------------------------------------


def _domain(p: AttributePredicate, vocab: Vocabulary | None) -> tuple[Kind, ValueRange]:
    if vocab is None:
        kind = p.value.kind
        return kind, ValueRange.universal(kind)
    entry = vocab.entry(p.category, p.attr)
    return entry.kind, entry.domain


def _coerce_range(r: ValueRange, kind: Kind) -> ValueRange:
    if r.kind is kind:
        return r
    if r.is_empty():
        return ValueRange.empty(kind)
    if r.kind is Kind.INTEGER and kind.ordered:
        return ValueRange.from_intervals(kind, r.intervals)
    raise KindMismatch(f"cannot use a {r.kind.value} range where {kind.value} is expected")


@functools.lru_cache(maxsize=65536)
def predicate_range(p: AttributePredicate, vocab: Vocabulary | None = None) -> ValueRange:
    """The set of domain values that satisfy ``p``.

    Negation complements within the vocabulary domain.  Without a vocabulary
    the domain is every value of the literal's kind.
    """
    kind, domain = _domain(p, vocab)
    if p.op.ordering and not kind.ordered:
        raise KindMismatch(f"operator {p.op.value} cannot compare {kind.value} attribute {p.attr}")
    if p.op is Op.IN:
        r = _coerce_range(p.value, kind)
    else:
        x = coerce(p.value, kind).data
        if p.op is Op.EQ:
            r = ValueRange.of_values(kind, [x])
        elif p.op is Op.NE:
            r = ValueRange.of_values(kind, [x], complemented=True)
        elif p.op is Op.LT:
            r = ValueRange.interval(kind, None, x, False, False)
        elif p.op is Op.LE:
            r = ValueRange.interval(kind, None, x, False, True)
        elif p.op is Op.GT:
            r = ValueRange.interval(kind, x, None, False, False)
        else:
            r = ValueRange.interval(kind, x, None, True, False)
    r = r.intersect(domain)
    if p.negated:
        r = domain.difference(r)
    return r


def range_predicate(category: Category, attr: str, r: ValueRange, like: AttributePredicate | None = None) -> AttributePredicate:
    """An ``in`` predicate denoting exactly ``r``, inheriting issuer/lifecycle from ``like``."""
    return AttributePredicate(
        category, attr, Op.IN, r,
        issuer=like.issuer if like else None,
        lifecycle=like.lifecycle if like else None,
    )


def merge_predicates(preds: list[AttributePredicate], vocab: Vocabulary | None) -> AttributePredicate | None:
    """Conjoin predicates on one attribute; None when the conjunction is empty."""
    first = preds[0]
    if all(p == first for p in preds):
        return None if predicate_range(first, vocab).is_empty() else first
    r = predicate_range(first, vocab)
    for p in preds[1:]:
        r = r.intersect(predicate_range(p, vocab))
    if r.is_empty():
        return None
    issuers = {p.issuer for p in preds if p.issuer}
    lcs = {p.lifecycle for p in preds if p.lifecycle}
    merged = AttributePredicate(
        first.category, first.attr, Op.IN, r,
        # conflicting issuers keep the first predicate's
        issuer=next(iter(issuers)) if len(issuers) == 1 else first.issuer,
        lifecycle=Lifecycle.EOT if Lifecycle.EOT in lcs else (Lifecycle.DP if lcs else None),
    )
    return simplest_form(merged, vocab)


def _comparison_candidates(r: ValueRange) -> list[tuple[Op, object]]:
    kind = r.kind
    if not kind.ordered:
        if len(r.members) == 1:
            return [(Op.NE if r.complemented else Op.EQ, next(iter(r.members)))]
        return []
    if len(r.intervals) != 1:
        return []
    iv = r.intervals[0]
    out: list[tuple[Op, object]] = []
    if iv.lo is not None and iv.lo == iv.hi:
        out.append((Op.EQ, iv.lo))
    step = 1 if kind.discrete else None
    if iv.hi is not None:
        out.append((Op.LE if iv.hi_closed else Op.LT, iv.hi))
        if step and iv.hi_closed:
            out.append((Op.LT, iv.hi + step))
    if iv.lo is not None:
        out.append((Op.GE if iv.lo_closed else Op.GT, iv.lo))
        if step and iv.lo_closed:
            out.append((Op.GT, iv.lo - step))
    return out


def simplest_form(p: AttributePredicate, vocab: Vocabulary | None) -> AttributePredicate:
    """The shortest comparison with the same meaning as ``p``, or ``p`` itself.

    Candidates are checked against ``predicate_range`` so the rewrite can
    never change which values satisfy the predicate.
    """
    from .syntax.printer import format_predicate

    target = predicate_range(p, vocab)
    best, best_text = p, format_predicate(p)
    for op, data in _comparison_candidates(target):
        try:
            cand = replace(p, op=op, value=Value(target.kind, data), negated=False)
        except ValueError:
            continue
        text = format_predicate(cand)
        if len(text) < len(best_text) and predicate_range(cand, vocab) == target:
            best, best_text = cand, text
    return best


def normalize_conjunct(preds: Iterable[AttributePredicate], vocab: Vocabulary | None) -> tuple[AttributePredicate, ...] | None:
    """Merge same-attribute predicates and sort; None if unsatisfiable."""
    groups: dict[AttrKey, list[AttributePredicate]] = {}
    for p in preds:
        groups.setdefault(p.key, []).append(p)
    out = []
    for key in sorted(groups, key=lambda k: (CATEGORY_ORDER[k[0]], k[1])):
        merged = merge_predicates(groups[key], vocab)
        if merged is None:
            return None
        out.append(merged)
    return tuple(out)


def _nnf(e: Expr, negate: bool = False) -> Expr:
    if isinstance(e, Pred):
        return Pred(e.predicate.negate()) if negate else e
    if isinstance(e, Const):
        return Const(e.value != negate)
    if isinstance(e, Not):
        return _nnf(e.item, not negate)
    items = tuple(_nnf(i, negate) for i in e.items)
    if isinstance(e, And):
        return Or(items) if negate else And(items)
    return And(items) if negate else Or(items)


def _dnf(e: Expr) -> list[list[AttributePredicate]]:
    if isinstance(e, Pred):
        return [[e.predicate]]
    if isinstance(e, Const):
        return [[]] if e.value else []
    if isinstance(e, Or):
        return [c for i in e.items for c in _dnf(i)]
    out: list[list[AttributePredicate]] = [[]]
    for item in e.items:
        sub = _dnf(item)
        out = [a + b for a, b in itertools.product(out, sub)]
    return out


def to_dnf(raw: Expr, vocab: Vocabulary | None = None) -> Condition:
    """Normalize a boolean expression over predicates into a ``Condition``."""
    conjuncts: list[tuple[AttributePredicate, ...]] = []
    for conj in _dnf(_nnf(raw)):
        norm = normalize_conjunct(conj, vocab)
        if norm == ():
            return Condition.true()
        if norm is not None and norm not in conjuncts:
            conjuncts.append(norm)
    return Condition(tuple(conjuncts))


def expr_of(cond: Condition) -> Expr:
    """Inverse direction of ``to_dnf``: the condition as an expression tree."""
    return Or(tuple(And(tuple(Pred(p) for p in conj)) for conj in cond.conjuncts))
