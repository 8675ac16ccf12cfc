"""Partner ranking."""

from __future__ import annotations

import random
from fractions import Fraction
from pathlib import Path

from hypothesis import given, settings
from hypothesis import strategies as st

from abuc.model import (
    AttributeEntry,
    AttributePredicate,
    Category,
    Condition,
    Effect,
    Op,
    Policy,
    PolicyKind,
    Right,
    Rule,
    Vocabulary,
)
from abuc.ratification import CSPState, aggregate_csp
from abuc.recommend import normalized_width, rank, score_qop, score_rop
from abuc.syntax import parse_policy, parse_vocabulary
from abuc.values import Kind, Value, ValueRange

from policygen import small_policy, small_vocabulary

FIX = Path(__file__).parent / "fixtures"
CLINIC = parse_vocabulary((FIX / "clinic.ucv").read_text())
SAT = Category.SAT

WIDE_VOCAB = Vocabulary({
    (SAT, f"a{i}"): AttributeEntry(Kind.INTEGER, ValueRange.interval(Kind.INTEGER, 0, 9)) for i in range(50)
})


def rop(text: str, pid: str = "p", kind: str = "RoP") -> Policy:
    return parse_policy(f"policy {pid} kind {kind} @sh={pid}\n{text}", CLINIC)


def at_least_five(n: int, pid: str) -> Policy:
    preds = tuple(AttributePredicate(SAT, f"a{i}", Op.GE, Value.integer(5)) for i in range(n))
    rule = Rule("r", Effect.PERMIT, (Right("read"),), Condition((preds,)))
    return Policy(pid, PolicyKind.ROP, (pid,), (rule,))


def order(ranked) -> list[str]:
    return [s.partner for s in ranked]


def test_wider_age_range_scores_higher():
    wide = score_rop(rop("rule r: Rt(read) <- SAT(age in [1, 15]);"), CLINIC)
    narrow = score_rop(rop("rule r: Rt(read) <- SAT(age in [1, 3]);"), CLINIC)
    # derived: 15 of the 21 grid points 0..20 against 3 of them
    assert wide.condition == (-1, Fraction(15, 21)) and narrow.condition == (-1, Fraction(3, 21))
    assert wide.key() > narrow.key()


def test_five_predicates_beat_fifty():
    ranked = rank([("fifty", at_least_five(50, "fifty"), None), ("five", at_least_five(5, "five"), None)], WIDE_VOCAB)
    assert order(ranked) == ["five", "fifty"]


def test_identical_policies_score_the_same_and_tie_by_id():
    p = rop("rule r: Rt(read) <- SAT(role = nurse);")
    ranked = rank([("zeta", p, None), ("alpha", p, None)], CLINIC)
    assert ranked[0].total == ranked[1].total and order(ranked) == ["alpha", "zeta"]


def test_fewer_predicates_first():
    three = at_least_five(3, "a")
    seven = at_least_five(7, "b")
    assert order(rank([("b", seven, None), ("a", three, None)], WIDE_VOCAB)) == ["a", "b"]


def test_richer_qop_breaks_an_rop_tie():
    p = rop("rule r: Rt(read) <- SAT(role = nurse);")
    thin = rop("rule q: Rt(read) <- SAT(role = nurse & age < 5);", "thin", "QoP")
    rich = rop("rule q: Rt(read) <- SAT(role = nurse & age < 5) & OAT(class = clinical);", "rich", "QoP")
    assert order(rank([("thin", p, thin), ("rich", p, rich)], CLINIC)) == ["rich", "thin"]


def test_rop_dominates_qop():
    slim = rop("rule r: Rt(read) <- SAT(role = nurse);")
    heavy = rop("rule r: Rt(read) <- SAT(role = nurse & age < 5);")
    generous = rop("rule q: Rt(read) <- SAT(role = nurse & age < 5) & OAT(class = clinical);", "q", "QoP")
    ranked = rank([("b", heavy, generous), ("a", slim, None)], CLINIC)
    assert order(ranked) == ["a", "b"]


def test_qop_score_is_the_inverse_of_the_rop_reading():
    q = rop("rule q: Rt(read & print) <- SAT(role = nurse);", "q", "QoP")
    assert score_qop(q, CLINIC) == score_rop(q, CLINIC).inverted()


def test_unbounded_attribute_without_grid():
    org = rop("rule r: Rt(read) <- SAT(organizationName = x);")
    (pred,) = org.rules[0].condition.conjuncts[0]
    assert normalized_width(pred, CLINIC) == 0


def test_weights_change_the_predicate_count():
    p = rop("rule r: Rt(read) <- SAT(role = nurse & age < 5);")
    plain = score_rop(p, CLINIC)
    heavy = score_rop(p, CLINIC, {(SAT, "age"): Fraction(3)})
    assert plain.condition[0] == -2 and heavy.condition[0] == -4


def test_candidates_that_conflict_with_the_context_are_dropped():
    csp = aggregate_csp(CSPState(), "lab_a", parse_policy((FIX / "irrelevant_read.ucp").read_text(), CLINIC), None, CLINIC).state
    writer = parse_policy((FIX / "irrelevant_write.ucp").read_text(), CLINIC)
    reader = rop("rule r: Rt(read) <- SAT(role = researcher) @lc=eot;", "reader")
    assert order(rank([("writer", writer, None), ("reader", reader, None)], CLINIC, csp=csp)) == ["reader"]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9), st.randoms(use_true_random=False))
def test_ranking_ignores_input_order(seed, rnd):
    rng = random.Random(seed)
    v = small_vocabulary(rng)
    candidates = [(f"c{i}", small_policy(rng, v, f"p{i}", f"c{i}"), None) for i in range(5)]
    shuffled = list(candidates)
    rnd.shuffle(shuffled)
    assert order(rank(candidates, v)) == order(rank(shuffled, v))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 8), st.integers(0, 9))
def test_narrower_extra_predicate_never_helps(n, bound):
    base = at_least_five(n, "base")
    rule = base.rules[0]
    extra = AttributePredicate(SAT, f"a{n}", Op.LT, Value.integer(bound))
    narrowed = Policy("base", PolicyKind.ROP, ("base",), (Rule("r", Effect.PERMIT, rule.rights, Condition((rule.condition.conjuncts[0] + (extra,),))),))
    assert score_rop(narrowed, WIDE_VOCAB).key() < score_rop(base, WIDE_VOCAB).key()
