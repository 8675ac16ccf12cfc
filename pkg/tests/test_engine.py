"""Attribute matching, rule verdicts, deny-override combination and decisions."""

from __future__ import annotations

import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abuc.engine import (
    MatchFailure,
    RuleVerdict,
    VerdictKind,
    attr_match,
    combine,
    evaluate,
    issuers_trusted,
    obligation_conflict,
    predicate_match,
    rule_match,
)
from abuc.errors import UnknownAttribute
from abuc.model import (
    Assignment,
    AttributePredicate,
    Category,
    Condition,
    Effect,
    ObligationSpec,
    Op,
    Outcome,
    Policy,
    PolicyKind,
    Request,
    Right,
    Rule,
)
from abuc.oracle import FiniteUniverse, enumerate_requests
from abuc.syntax import parse_policy, parse_request, parse_vocabulary
from abuc.values import DAY, Value

from combinator_reference import ALPHABET, all_vectors, expected, to_verdict
from policygen import RIGHTS, small_policy, small_vocabulary

FIX = Path(__file__).parent / "fixtures"
CLINIC = parse_vocabulary((FIX / "clinic.ucv").read_text())
ROP = parse_policy((FIX / "clinic_rop.ucp").read_text(), CLINIC)
SAT, OAT, CNAT = Category.SAT, Category.OAT, Category.CNAT


def request(*assignments, rights=("read",), t=0, promised=()) -> Request:
    return Request(tuple(assignments), frozenset(rights), tuple(promised), t)


def doctor(issuer=None) -> Assignment:
    return Assignment(SAT, "role", Value.text("doctor"), issuer)


IS_DOCTOR = AttributePredicate(SAT, "role", Op.EQ, Value.text("doctor"))


# -- attribute and predicate matching -----------------------------------------------------------


def test_missing_attribute_is_no_attribute():
    assert attr_match(IS_DOCTOR, request(), CLINIC) is MatchFailure.NO_ATTRIBUTE
    assert predicate_match(IS_DOCTOR, request(), CLINIC) is None


def test_issuers_in_one_trust_group_are_accepted():
    assert issuers_trusted("CA-A", "CA-B", CLINIC)
    assert issuers_trusted(None, "anyone", CLINIC)
    assert not issuers_trusted("CA-A", "CA-Z", CLINIC)


def test_untrusted_value_is_indeterminate_not_false():
    pred = AttributePredicate(SAT, "role", Op.EQ, Value.text("doctor"), issuer="CA-A")
    assert attr_match(pred, request(doctor("CA-Z")), CLINIC) is MatchFailure.UNTRUSTED
    assert predicate_match(pred, request(doctor("CA-Z")), CLINIC) is None
    assert predicate_match(pred, request(doctor("CA-B")), CLINIC) is True


def test_predicate_match_true_and_false():
    assert predicate_match(IS_DOCTOR, request(doctor()), CLINIC) is True
    nurse = Assignment(SAT, "role", Value.text("nurse"))
    assert predicate_match(IS_DOCTOR, request(nurse), CLINIC) is False


# -- rule verdicts ---------------------------------------------------------------------------------


def _rule(*preds, effect=Effect.PERMIT, rights=("read",), restrictions=()) -> Rule:
    return Rule("r", effect, tuple(Right(r) for r in rights), Condition((tuple(preds),)), restrictions=restrictions)


def test_rule_with_disjoint_rights_is_not_applicable():
    verdict = rule_match(_rule(IS_DOCTOR, rights=("write",)), request(doctor()), CLINIC)
    assert verdict.kind is VerdictKind.NOT_APPLICABLE


def test_true_and_indeterminate_predicates_give_indeterminate():
    clinical = AttributePredicate(OAT, "class", Op.EQ, Value.text("clinical"))
    verdict = rule_match(_rule(IS_DOCTOR, clinical), request(doctor()), CLINIC)
    assert verdict.kind is VerdictKind.INDETERMINATE and verdict.missing == ("OAT.class",)


def test_one_false_predicate_makes_the_conjunct_fail():
    clinical = AttributePredicate(OAT, "class", Op.EQ, Value.text("clinical"))
    nurse = Assignment(SAT, "role", Value.text("nurse"))
    assert rule_match(_rule(IS_DOCTOR, clinical), request(nurse), CLINIC).kind is VerdictKind.NOT_APPLICABLE


def test_violated_restriction_rules_the_rule_out():
    within = AttributePredicate(CNAT, "within", Op.LT, Value.duration(10 * DAY))
    rule = _rule(IS_DOCTOR, restrictions=(within,))
    late = Assignment(CNAT, "within", Value.duration(30 * DAY))
    assert rule_match(rule, request(doctor(), late), CLINIC).kind is VerdictKind.NOT_APPLICABLE
    assert rule_match(rule, request(doctor()), CLINIC).kind is VerdictKind.MATCHED


def test_indeterminate_verdict_must_name_what_is_missing():
    with pytest.raises(ValueError):
        RuleVerdict(rule_id="r", kind=VerdictKind.INDETERMINATE, effect=Effect.PERMIT)


# -- combination -----------------------------------------------------------------------------------


def test_combine_matches_the_inference_rules():
    mismatches = [v for v in all_vectors(4) if combine(map(to_verdict, v)) != expected(v)]
    assert mismatches == []


def test_every_length_four_vector_is_checked():
    assert sum(1 for v in all_vectors(4) if len(v) == 4) == len(ALPHABET) ** 4 == 625


def test_matched_permit_with_unresolved_deny_is_indeterminate():
    vs = [RuleVerdict.matched(Effect.PERMIT), RuleVerdict.indeterminate(Effect.DENY, ["SAT.age"])]
    assert combine(vs) is Outcome.INDETERMINATE


def test_matched_deny_overrides_matched_permit():
    assert combine([RuleVerdict.matched(Effect.PERMIT), RuleVerdict.matched(Effect.DENY)]) is Outcome.DENY


@settings(max_examples=200)
@given(st.lists(st.sampled_from(ALPHABET), max_size=6), st.randoms(use_true_random=False))
def test_combine_ignores_rule_order(vector, rnd):
    shuffled = list(vector)
    rnd.shuffle(shuffled)
    assert combine(map(to_verdict, vector)) == combine(map(to_verdict, shuffled))


# -- obligations ---------------------------------------------------------------------------------


def test_promise_that_breaks_the_restriction_conflicts():
    rule = ROP.rules[0]
    slow = ObligationSpec("delete_data", window=(0, 30 * DAY))
    fast = ObligationSpec("delete_data", window=(0, 5 * DAY))
    assert obligation_conflict(rule, request(promised=[slow]), CLINIC)
    assert not obligation_conflict(rule, request(promised=[fast]), CLINIC)


def test_promising_the_opposite_obligation_conflicts():
    rule = ROP.rules[0]
    refuse = ObligationSpec("delete_data", window=(0, 5 * DAY), negated=True)
    assert obligation_conflict(rule, request(promised=[refuse]), CLINIC)


def test_obligation_conflict_turns_a_permit_into_a_deny():
    q = parse_request((FIX / "permit_doctor.ucr").read_text(), CLINIC)
    assert evaluate(ROP, q, CLINIC).outcome is Outcome.PERMIT
    slow = Request(q.assignments, q.demanded_rights, (ObligationSpec("delete_data", window=(0, 30 * DAY)),), q.t)
    d = evaluate(ROP, slow, CLINIC)
    assert d.outcome is Outcome.DENY
    assert d.trace[0].conflict


# -- decisions ---------------------------------------------------------------------------------


def test_permit_carries_rights_obligations_restrictions_and_time():
    q = parse_request((FIX / "permit_doctor.ucr").read_text(), CLINIC)
    d = evaluate(ROP, q, CLINIC)
    assert d.granted_rights == {"read"}
    assert d.obligations == ROP.rules[0].obligations
    assert d.restrictions == ROP.rules[0].restrictions
    assert d.decision_time == 1000


def test_matching_deny_rule_denies():
    q = parse_request((FIX / "deny_offender.ucr").read_text(), CLINIC)
    d = evaluate(ROP, q, CLINIC)
    assert d.outcome is Outcome.DENY and not d.granted_rights


def test_nothing_applicable_flattens_to_deny():
    q = parse_request((FIX / "nobody.ucr").read_text(), CLINIC)
    assert evaluate(ROP, q, CLINIC).outcome is Outcome.NOT_APPLICABLE
    assert evaluate(ROP, q, CLINIC, flatten=True).outcome is Outcome.DENY


def test_granted_rights_are_limited_to_the_demand():
    p = Policy("p", PolicyKind.ROP, ("h",), (Rule("r", Effect.PERMIT, (Right("read"), Right("print"))),))
    d = evaluate(p, request(rights=("read", "write")), CLINIC)
    assert d.granted_rights == {"read"}


def test_unknown_request_attribute_raises():
    q = request(Assignment(SAT, "shoeSize", Value.integer(42)))
    with pytest.raises(UnknownAttribute):
        evaluate(ROP, q, CLINIC)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9))
def test_decision_invariants_on_random_policies(seed):
    rng = random.Random(seed)
    v = small_vocabulary(rng)
    p = small_policy(rng, v, "p", "alice")
    for q in enumerate_requests(FiniteUniverse.from_vocabulary(v, RIGHTS)):
        d = evaluate(p, q, v)
        assert d.granted_rights <= q.demanded_rights
        assert bool(d.granted_rights) == (d.outcome is Outcome.PERMIT)
        flat = evaluate(p, q, v, flatten=True).outcome
        assert flat is (Outcome.PERMIT if d.outcome is Outcome.PERMIT else Outcome.DENY)
