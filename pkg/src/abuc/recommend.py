"""Ranking of candidate partners by how easy their policies are to live with.

A provider's requirements (RoP) are better when they ask for little: few
predicates with wide ranges, many rights, few restrictions and obligations.
A consumer's promises (QoP) are better when they offer much, so every QoP
component is scored with the opposite sign.  Scores compare
lexicographically: condition, then rights, then restrictions, then
obligations, with RoP ahead of QoP.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .model import AttrKey, AttributePredicate, Policy, Vocabulary, predicate_range
from .ratification import CSPState, aggregate_csp


@dataclass(frozen=True)
class ScoreComponents:
    """Each component is a tuple where larger means more attractive."""

    condition: tuple[Fraction, Fraction]
    rights: tuple[int]
    restriction: tuple[Fraction, Fraction]
    obligation: tuple[int]

    def key(self) -> tuple:
        return self.condition + self.rights + self.restriction + self.obligation

    def inverted(self) -> ScoreComponents:
        return ScoreComponents(
            tuple(-x for x in self.condition),
            tuple(-x for x in self.rights),
            tuple(-x for x in self.restriction),
            tuple(-x for x in self.obligation),
        )

    def to_json(self) -> dict:
        return {
            "condition": [str(x) for x in self.condition],
            "rights": list(self.rights),
            "restriction": [str(x) for x in self.restriction],
            "obligation": list(self.obligation),
        }


@dataclass(frozen=True)
class CandidateScore:
    partner: str
    rop: ScoreComponents
    qop: ScoreComponents

    @property
    def total(self) -> tuple:
        return self.rop.key() + self.qop.key()


def normalized_width(p: AttributePredicate, v: Vocabulary) -> Fraction:
    """Share of the attribute's enumeration grid that ``p`` accepts.

    Attributes without a finite enumeration count as fully wide when the
    predicate accepts the whole domain and as zero-width otherwise.
    """
    entry = v.entry(p.category, p.attr)
    r = predicate_range(p, v)
    grid = entry.enumeration()
    if not grid:
        return Fraction(1) if entry.domain.issubset(r) else Fraction(0)
    return Fraction(r.count_in(grid), len(grid))


def slimness(preds: Sequence[AttributePredicate], v: Vocabulary, weights: Mapping[AttrKey, Fraction] | None = None) -> tuple[Fraction, Fraction]:
    """(-weighted predicate count, weighted mean normalized width)."""
    if not preds:
        return (Fraction(0), Fraction(1))
    ws = [Fraction((weights or {}).get(p.key, 1)) for p in preds]
    total = sum(ws, Fraction(0))
    if total == 0:
        return (Fraction(0), Fraction(1))
    width = sum((w * normalized_width(p, v) for w, p in zip(ws, preds)), Fraction(0)) / total
    return (-total, width)


def score_rop(p: Policy, v: Vocabulary, weights: Mapping[AttrKey, Fraction] | None = None) -> ScoreComponents:
    permits = p.permit_rules()
    cond = [x for rule in permits for conj in rule.condition.conjuncts for x in conj]
    restr = [x for rule in permits for x in rule.restrictions]
    rights = {r for rule in permits for r in rule.granted_rights}
    obligations = {o for rule in permits for o in rule.obligations}
    return ScoreComponents(
        condition=slimness(cond, v, weights),
        rights=(len(rights),),
        restriction=slimness(restr, v, weights),
        obligation=(-len(obligations),),
    )


def score_qop(p: Policy | None, v: Vocabulary, weights: Mapping[AttrKey, Fraction] | None = None) -> ScoreComponents:
    if p is None:
        p_score = ScoreComponents((Fraction(0), Fraction(1)), (0,), (Fraction(0), Fraction(1)), (0,))
    else:
        p_score = score_rop(p, v, weights)
    return p_score.inverted()


def rank(
    candidates: Iterable[tuple[str, Policy, Policy | None]],
    v: Vocabulary,
    csp: CSPState | None = None,
    weights: Mapping[AttrKey, Fraction] | None = None,
) -> list[CandidateScore]:
    """Best candidate first; ties go to the smaller partner id.

    With ``csp``, candidates whose policies cannot be folded into it are
    left out.
    """
    scores = []
    for partner, rop, qop in candidates:
        if csp is not None and aggregate_csp(csp, partner, rop, qop, v).failed:
            continue
        scores.append(CandidateScore(partner, score_rop(rop, v, weights), score_qop(qop, v, weights)))
    best_first = sorted(scores, key=lambda s: s.partner)
    best_first.sort(key=lambda s: s.total, reverse=True)
    return best_first


__all__ = ["CandidateScore", "ScoreComponents", "normalized_width", "rank", "score_qop", "score_rop", "slimness"]
