"""Policy ratification: comparing, combining and folding policies of several parties.

Region reasoning works on boxes.  A conjunct together with the rule's
restrictions pins every attribute it mentions to a value range, and leaves
the others at their full vocabulary domain.  Sets of requests are unions of
such boxes, and differences of unions are computed exactly by splitting
boxes attribute by attribute.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .errors import VocabularyMismatch
from .model import (
    CATEGORY_ORDER,
    AttrKey,
    AttributePredicate,
    Condition,
    Effect,
    Lifecycle,
    Policy,
    PolicyKind,
    Right,
    Rule,
    Vocabulary,
    normalize_conjunct,
    predicate_range,
    range_predicate,
)
from .values import ValueRange

# -- predicate relations -------------------------------------------------------------


class RelationKind(str, enum.Enum):
    CONTRADICT = "Contradict"
    DISTINCT = "Distinct"
    COMMON = "Common"
    RESTRICTING = "Restricting"
    INTERSECTING = "Intersecting"


@dataclass(frozen=True)
class PredicateRelation:
    """Relation between two predicates.

    For ``Restricting``, ``side`` is the predicate that gets restricted (1 or
    2), i.e. the one with the wider range.  For ``Distinct`` at rule level,
    ``side`` is the rule that owns the unmatched predicate.
    """

    kind: RelationKind
    side: int | None = None

    def __str__(self) -> str:
        return self.kind.value if self.side is None else f"{self.kind.value}({self.side})"


def classify_predicates(m1: AttributePredicate, m2: AttributePredicate, v: Vocabulary) -> PredicateRelation:
    if m1.key != m2.key:
        v.entry(*m1.key)
        v.entry(*m2.key)
        return PredicateRelation(RelationKind.DISTINCT)
    return _classify_ranges(predicate_range(m1, v), predicate_range(m2, v))


def _classify_ranges(r1: ValueRange, r2: ValueRange) -> PredicateRelation:
    # two empty ranges are equal but share no value, so emptiness is tested first
    if r1.intersect(r2).is_empty():
        return PredicateRelation(RelationKind.CONTRADICT)
    if r1 == r2:
        return PredicateRelation(RelationKind.COMMON)
    if r2.issubset(r1):
        return PredicateRelation(RelationKind.RESTRICTING, 1)
    if r1.issubset(r2):
        return PredicateRelation(RelationKind.RESTRICTING, 2)
    return PredicateRelation(RelationKind.INTERSECTING)


# -- rule similarity ----------------------------------------------------------------


class SimilarityKind(str, enum.Enum):
    DISJOINT = "Disjoint"
    CONJOINT = "Conjoint"
    COVERS = "Covers"
    OVERLAP = "Overlap"


class CoverVia(str, enum.Enum):
    RESTRICTS = "restricts"
    REFINES = "refines"
    BOTH = "both"


@dataclass(frozen=True)
class RuleSimilarity:
    """``direction`` is the covering side for ``Covers``: 1 means r1 covers r2."""

    kind: SimilarityKind
    direction: int | None = None
    via: CoverVia | None = None
    reasons: tuple[str, ...] = ()

    def __str__(self) -> str:
        if self.kind is SimilarityKind.COVERS:
            return f"Covers(r{self.direction} over r{3 - self.direction}, via {self.via.value})"
        if self.kind is SimilarityKind.OVERLAP:
            return f"Overlap({', '.join(self.reasons)})"
        return self.kind.value


def atomic_predicates(rule_or_conjunct: Rule | Sequence[AttributePredicate], v: Vocabulary) -> tuple[AttributePredicate, ...] | None:
    """The predicates of an atomic rule, restrictions included; None if unsatisfiable."""
    if isinstance(rule_or_conjunct, Rule):
        conjuncts = rule_or_conjunct.condition.conjuncts
        if len(conjuncts) != 1:
            raise ValueError(f"rule {rule_or_conjunct.id} is not atomic: it has {len(conjuncts)} conjuncts")
        preds = list(conjuncts[0]) + list(rule_or_conjunct.restrictions)
    else:
        preds = list(rule_or_conjunct)
    return normalize_conjunct(preds, v)


def relation_matrix(c1: Sequence[AttributePredicate], c2: Sequence[AttributePredicate], v: Vocabulary) -> dict[AttrKey, PredicateRelation]:
    """Per-attribute relation between two normalized conjuncts."""
    by1 = {p.key: p for p in c1}
    by2 = {p.key: p for p in c2}
    out: dict[AttrKey, PredicateRelation] = {}
    for key in sorted(set(by1) | set(by2), key=lambda k: (CATEGORY_ORDER[k[0]], k[1])):
        if key in by1 and key in by2:
            out[key] = classify_predicates(by1[key], by2[key], v)
        else:
            out[key] = PredicateRelation(RelationKind.DISTINCT, 1 if key in by1 else 2)
    return out


def rule_similarity(r1: Rule | Sequence[AttributePredicate], r2: Rule | Sequence[AttributePredicate], v: Vocabulary) -> RuleSimilarity:
    c1 = atomic_predicates(r1, v)
    c2 = atomic_predicates(r2, v)
    if c1 is None or c2 is None:
        raise ValueError("rule similarity needs satisfiable rules")
    rel = list(relation_matrix(c1, c2, v).values())
    kinds = [r.kind for r in rel]
    if RelationKind.CONTRADICT in kinds:
        return RuleSimilarity(SimilarityKind.DISJOINT)
    distinct = {r.side for r in rel if r.kind is RelationKind.DISTINCT}
    restricted = {r.side for r in rel if r.kind is RelationKind.RESTRICTING}
    intersecting = RelationKind.INTERSECTING in kinds
    if not distinct and not restricted and not intersecting:
        return RuleSimilarity(SimilarityKind.CONJOINT)
    if not intersecting:
        for covering in (1, 2):
            narrower = 3 - covering
            # the covering side may be restricted and the narrower side may carry extra attributes
            if restricted <= {covering} and distinct <= {narrower}:
                via = CoverVia.BOTH if restricted and distinct else (CoverVia.RESTRICTS if restricted else CoverVia.REFINES)
                return RuleSimilarity(SimilarityKind.COVERS, covering, via)
    reasons = []
    if intersecting:
        reasons.append("intersecting predicates")
    if distinct == {1, 2}:
        reasons.append("distinct predicates on both sides")
    if restricted == {1, 2}:
        reasons.append("mutual restriction")
    if len(restricted) == 1 and distinct == restricted:
        reasons.append("restricted side extends the other with distinct predicates")
    return RuleSimilarity(SimilarityKind.OVERLAP, reasons=tuple(reasons))


# -- boxes ----------------------------------------------------------------------------

Box = dict


def _domain(key: AttrKey, v: Vocabulary) -> ValueRange:
    return v.entry(*key).domain


def conjunct_box(preds: Iterable[AttributePredicate], v: Vocabulary) -> Box | None:
    box: Box = {}
    for p in preds:
        r = predicate_range(p, v)
        box[p.key] = box[p.key].intersect(r) if p.key in box else r
        if box[p.key].is_empty():
            return None
    return box


def rule_boxes(rule: Rule, v: Vocabulary) -> list[Box]:
    out = []
    for conj in rule.condition.conjuncts:
        b = conjunct_box(list(conj) + list(rule.restrictions), v)
        if b is not None:
            out.append(b)
    return out


def box_subtract(b: Box, d: Box, v: Vocabulary) -> list[Box]:
    """``b`` minus ``d`` as disjoint boxes."""
    out: list[Box] = []
    rest = dict(b)
    for key in sorted(d, key=lambda k: (CATEGORY_ORDER[k[0]], k[1])):
        cur = rest.get(key, _domain(key, v))
        outside = cur.difference(d[key])
        if not outside.is_empty():
            piece = dict(rest)
            piece[key] = outside
            out.append(piece)
        inside = cur.intersect(d[key])
        if inside.is_empty():
            return [b]
        rest[key] = inside
    return out


def region_minus(region: list[Box], holes: list[Box], v: Vocabulary) -> list[Box]:
    for h in holes:
        region = [piece for b in region for piece in box_subtract(b, h, v)]
        if not region:
            break
    return region


def boxes_overlap(a: Box, b: Box, v: Vocabulary) -> bool:
    for key in set(a) & set(b):
        if a[key].intersect(b[key]).is_empty():
            return False
    return True


def permitted_region(p: Policy, v: Vocabulary) -> dict[str, list[Box]]:
    """Per right, the requests ``p`` permits, assuming every attribute is supplied."""
    out: dict[str, list[Box]] = {}
    for right in sorted({r for rule in p.permit_rules() for r in rule.granted_rights}):
        allow = [b for rule in p.permit_rules() if right in rule.granted_rights for b in rule_boxes(rule, v)]
        deny = [b for rule in p.deny_rules() if right in rule.granted_rights for b in rule_boxes(rule, v)]
        left = region_minus(allow, deny, v)
        if left:
            out[right] = left
    return out


def permits_nothing(p: Policy, v: Vocabulary) -> bool:
    return not permitted_region(p, v)


# -- domain projection ------------------------------------------------------------------


@dataclass(frozen=True)
class DomainConstraint:
    entries: tuple[tuple[AttrKey, ValueRange], ...]

    def __post_init__(self) -> None:
        keys = [k for k, _ in self.entries]
        if len(keys) != len(set(keys)):
            raise ValueError("domain constraint names an attribute twice")
        object.__setattr__(self, "entries", tuple(sorted(self.entries, key=lambda e: (CATEGORY_ORDER[e[0][0]], e[0][1]))))

    @classmethod
    def of(cls, mapping: dict) -> DomainConstraint:
        return cls(tuple(mapping.items()))

    def predicates(self) -> list[AttributePredicate]:
        return [range_predicate(cat, attr, r) for (cat, attr), r in self.entries]

    def satisfied_by(self, q, v: Vocabulary) -> bool:
        for key, r in self.entries:
            a = q.get(*key)
            if a is None or a.value not in r:
                return False
        return True


def domain_projection(p: Policy, dc: DomainConstraint, v: Vocabulary) -> Policy:
    for key, r in dc.entries:
        entry = v.entry(*key)
        if r.kind is not entry.kind:
            raise VocabularyMismatch(f"constraint on {key[1]} is {r.kind.value}, the attribute is {entry.kind.value}")
    extra = dc.predicates()
    rules = []
    for rule in p.rules:
        conjuncts = []
        for conj in rule.condition.conjuncts:
            merged = normalize_conjunct(list(conj) + extra, v)
            if merged is not None and merged not in conjuncts:
                conjuncts.append(merged)
        rules.append(replace(rule, condition=Condition(tuple(conjuncts))))
    return replace(p, rules=tuple(rules))


def vocabulary_compatible(p1: Policy, p2: Policy, v: Vocabulary) -> bool:
    a1, a2 = p1.attributes(), p2.attributes()
    return a1 <= a2 or a2 <= a1


# -- conflicts and intersection ------------------------------------------------------------


class ConflictKind(str, enum.Enum):
    IRRELEVANT = "IrrelevantPermitRules"
    INCOMPATIBLE = "IncompatiblePermitRules"
    MODALITIES = "PositiveNegativeModalities"
    IMPERIAL = "ImperialAuthority"
    VOCABULARY = "VocabularyMismatch"


@dataclass(frozen=True)
class ConflictReport:
    """One detected conflict.

    ``rules`` pairs each involved rule id with its stakeholders.  For
    ImperialAuthority, ``cross_owner`` tells whether the two rules belong to
    different stakeholders.
    """

    kind: ConflictKind
    rules: tuple[tuple[str, tuple[str, ...]], ...]
    witness: tuple[str, ...] = ()
    cross_owner: bool = False

    def __post_init__(self) -> None:
        if self.kind is not ConflictKind.VOCABULARY and not self.witness:
            raise ValueError(f"{self.kind.value} report needs a witness")

    def to_json(self) -> dict:
        out = {
            "kind": self.kind.value,
            "rules": [{"id": rid, "stakeholders": list(sh)} for rid, sh in self.rules],
            "witness": list(self.witness),
        }
        if self.kind is ConflictKind.IMPERIAL:
            out["cross_owner"] = self.cross_owner
        return out


@dataclass(frozen=True)
class AggregationResult:
    policy: Policy | None
    reports: tuple[ConflictReport, ...]
    failed: bool

    @property
    def vocabulary_mismatch(self) -> bool:
        return any(r.kind is ConflictKind.VOCABULARY for r in self.reports)


def _ref(rule: Rule) -> tuple[str, tuple[str, ...]]:
    return (rule.id, rule.stakeholders)


def _unique_id(base: str, used: set[str]) -> str:
    rid, n = base, 2
    while rid in used:
        rid, n = f"{base}~{n}", n + 1
    used.add(rid)
    return rid


def _incompatibility(r1: Rule, r2: Rule, v: Vocabulary) -> tuple[str, ...]:
    """A human-readable reason why no request satisfies both permit rules."""
    from .syntax.printer import format_predicate

    for rule in (r1, r2):
        if not rule_boxes(rule, v):
            return (f"{rule.id} is unsatisfiable on its own",)
    for c1, c2 in itertools.product(r1.condition.conjuncts, r2.condition.conjuncts):
        by2 = {p.key: p for p in list(c2) + list(r2.restrictions)}
        for p in list(c1) + list(r1.restrictions):
            q = by2.get(p.key)
            if q is not None and classify_predicates(p, q, v).kind is RelationKind.CONTRADICT:
                return (format_predicate(p), format_predicate(q))
    # no single pair contradicts: ranges only become empty once several predicates are merged
    return tuple(format_predicate(p) for p in list(r1.condition.predicates()) + list(r2.condition.predicates())
                 + list(r1.restrictions) + list(r2.restrictions)) or (f"{r1.id} and {r2.id} share no request",)


def merge_rules(r1: Rule, r2: Rule, v: Vocabulary, rule_id: str) -> Rule | None:
    """Conjunction of two permit rules; None when no request can satisfy both."""
    rights = r1.granted_rights & r2.granted_rights
    if not rights:
        return None
    restrictions = normalize_conjunct(list(r1.restrictions) + list(r2.restrictions), v)
    if restrictions is None:
        return None
    conjuncts = []
    for c1, c2 in itertools.product(r1.condition.conjuncts, r2.condition.conjuncts):
        merged = normalize_conjunct(list(c1) + list(c2), v)
        if merged is None or merged in conjuncts:
            continue
        if conjunct_box(list(merged) + list(restrictions), v) is None:
            continue
        conjuncts.append(merged)
    if not conjuncts:
        return None
    return Rule(
        id=rule_id,
        effect=Effect.PERMIT,
        rights=tuple(Right(r) for r in sorted(rights)),
        condition=Condition(tuple(conjuncts)),
        obligations=r1.obligations + r2.obligations,
        restrictions=restrictions,
        lifecycle=Lifecycle.EOT if Lifecycle.EOT in (r1.lifecycle, r2.lifecycle) else Lifecycle.DP,
        stakeholders=r1.stakeholders + r2.stakeholders,
    )


def _imperial(pa: Policy, pb: Policy, v: Vocabulary) -> list[ConflictReport]:
    out = []
    for permit in pa.permit_rules():
        actions = sorted({o.action for o in permit.obligations if not o.negated})
        if not actions:
            continue
        pboxes = rule_boxes(permit, v)
        for deny in pb.deny_rules():
            if deny.id == permit.id and pa is pb:
                continue
            hit = [a for a in actions if a in deny.granted_rights]
            if not hit:
                continue
            dboxes = rule_boxes(deny, v)
            if any(boxes_overlap(a, b, v) for a in pboxes for b in dboxes):
                out.append(ConflictReport(
                    ConflictKind.IMPERIAL, (_ref(permit), _ref(deny)),
                    witness=tuple(f"obligation {a} is a denied right" for a in hit),
                    cross_owner=not set(permit.stakeholders) & set(deny.stakeholders),
                ))
    return out


def detect_conflicts(p1: Policy, p2: Policy, candidate: Policy | None, v: Vocabulary) -> list[ConflictReport]:
    reports: list[ConflictReport] = []
    if candidate is None or not vocabulary_compatible(p1, p2, v):
        return [ConflictReport(ConflictKind.VOCABULARY, (("", p1.stakeholders), ("", p2.stakeholders)))]
    for r1, r2 in itertools.product(p1.permit_rules(), p2.permit_rules()):
        if not r1.granted_rights & r2.granted_rights:
            reports.append(ConflictReport(
                ConflictKind.IRRELEVANT, (_ref(r1), _ref(r2)),
                witness=(",".join(sorted(r1.granted_rights)), ",".join(sorted(r2.granted_rights))),
            ))
        elif merge_rules(r1, r2, v, "_") is None:
            reports.append(ConflictReport(
                ConflictKind.INCOMPATIBLE, (_ref(r1), _ref(r2)), witness=_incompatibility(r1, r2, v),
            ))
    denies = candidate.deny_rules()
    for rule in candidate.permit_rules():
        covering: list[Rule] = []
        covered = True
        for right in sorted(rule.granted_rights):
            holes = [(d, b) for d in denies if right in d.granted_rights for b in rule_boxes(d, v)]
            if region_minus(rule_boxes(rule, v), [b for _, b in holes], v):
                covered = False
                break
            covering.extend(d for d, _ in holes if d not in covering)
        if covered and covering:
            reports.append(ConflictReport(
                ConflictKind.MODALITIES, (_ref(rule),) + tuple(_ref(d) for d in covering),
                witness=tuple(d.id for d in covering),
            ))
    for pa, pb in ((p1, p2), (p2, p1), (p1, p1), (p2, p2)):
        reports.extend(_imperial(pa, pb, v))
    return reports


def intersect_policies(p1: Policy, p2: Policy, v: Vocabulary, flatten: bool = True, policy_id: str | None = None) -> AggregationResult:
    """Pairwise aggregation.

    ``flatten`` does not change the constructed policy: under deny-override
    the same rule set yields both the three-valued and the flattened
    semantics, so it only documents which reading the caller relies on.
    """
    if not vocabulary_compatible(p1, p2, v):
        return AggregationResult(None, tuple(detect_conflicts(p1, p2, None, v)), True)
    used: set[str] = set()
    rules: list[Rule] = []
    for r1, r2 in itertools.product(p1.permit_rules(), p2.permit_rules()):
        merged = merge_rules(r1, r2, v, f"{r1.id}+{r2.id}")
        if merged is not None:
            rules.append(replace(merged, id=_unique_id(merged.id, used)))
    seen_denies: list[Rule] = []
    for d in p1.deny_rules() + p2.deny_rules():
        anon = replace(d, id="", stakeholders=())
        if anon in seen_denies:
            continue
        seen_denies.append(anon)
        rules.append(replace(d, id=_unique_id(d.id, used)))
    candidate = Policy(
        policy_id or f"{p1.id}+{p2.id}", PolicyKind.CSP, p1.stakeholders + p2.stakeholders, tuple(rules),
    )
    reports = detect_conflicts(p1, p2, candidate, v)
    return AggregationResult(candidate, tuple(reports), permits_nothing(candidate, v))


# -- CSP fold -------------------------------------------------------------------------


def _outlives(p: AttributePredicate, rule: Rule) -> bool:
    return (p.lifecycle or rule.lifecycle) is Lifecycle.EOT


def lifecycle_filter(p: Policy) -> Policy:
    """The part of ``p`` that outlives direct exchange.

    An ``eot`` rule is kept whole.  A ``dp`` rule keeps only its ``eot``
    predicates, and only the conjuncts that still have one.
    """
    rules = []
    for rule in p.rules:
        if rule.lifecycle is Lifecycle.EOT:
            rules.append(rule)
            continue
        conjuncts = []
        for conj in rule.condition.conjuncts:
            kept = tuple(x for x in conj if _outlives(x, rule))
            if kept and kept not in conjuncts:
                conjuncts.append(kept)
        restrictions = tuple(x for x in rule.restrictions if _outlives(x, rule))
        if conjuncts:
            rules.append(replace(rule, condition=Condition(tuple(conjuncts)), restrictions=restrictions))
    return replace(p, rules=tuple(rules))


@dataclass(frozen=True)
class CSPState:
    """Aggregated context: None on a side means no partner has contributed yet."""

    rop: Policy | None = None
    qop: Policy | None = None
    members: tuple[str, ...] = ()


@dataclass(frozen=True)
class FoldResult:
    state: CSPState
    reports: tuple[ConflictReport, ...]
    failed: bool
    notes: tuple[str, ...] = field(default=())


def _as_csp(p: Policy, pid: str) -> Policy:
    return replace(p, id=pid, kind=PolicyKind.CSP)


def _fold_side(current: Policy | None, incoming: Policy, v: Vocabulary, pid: str) -> AggregationResult:
    if current is None:
        return AggregationResult(_as_csp(incoming, pid), (), False)
    res = intersect_policies(current, incoming, v, policy_id=pid)
    if res.policy is not None:
        return replace(res, policy=_as_csp(res.policy, pid))
    return res


def aggregate_csp(state: CSPState, partner: str, rop: Policy, qop: Policy | None, v: Vocabulary) -> FoldResult:
    notes: list[str] = []
    filtered = lifecycle_filter(rop)
    reports: list[ConflictReport] = []
    new_rop = state.rop
    if not filtered.rules:
        notes.append(f"{partner}: no RoP element outlives direct exchange; RoP side unchanged")
    else:
        res = _fold_side(state.rop, filtered, v, "rop_csp")
        reports.extend(res.reports)
        if res.failed:
            return FoldResult(state, tuple(reports), True, tuple(notes))
        new_rop = res.policy
    new_qop = state.qop
    if qop is not None and qop.rules:
        res = _fold_side(state.qop, qop, v, "qop_csp")
        reports.extend(res.reports)
        if res.failed:
            return FoldResult(state, tuple(reports), True, tuple(notes))
        new_qop = res.policy
    members = state.members if partner in state.members else state.members + (partner,)
    return FoldResult(CSPState(new_rop, new_qop, members), tuple(reports), False, tuple(notes))


__all__ = [
    "AggregationResult",
    "CSPState",
    "ConflictKind",
    "ConflictReport",
    "CoverVia",
    "DomainConstraint",
    "FoldResult",
    "PredicateRelation",
    "RelationKind",
    "RuleSimilarity",
    "SimilarityKind",
    "aggregate_csp",
    "atomic_predicates",
    "box_subtract",
    "classify_predicates",
    "conjunct_box",
    "detect_conflicts",
    "domain_projection",
    "intersect_policies",
    "lifecycle_filter",
    "merge_rules",
    "permits_nothing",
    "permitted_region",
    "region_minus",
    "relation_matrix",
    "rule_boxes",
    "rule_similarity",
    "vocabulary_compatible",
]
