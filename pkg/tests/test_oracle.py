"""Brute-force request enumeration and the checks built on it."""

from __future__ import annotations

import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abuc.errors import UniverseTooLarge
from abuc.model import AttributeEntry, Category, Effect, Policy, PolicyKind, Right, Rule, Vocabulary
from abuc.oracle import FiniteUniverse, check_cover, check_intersection, enumerate_requests, partition
from abuc.ratification import intersect_policies
from abuc.syntax import parse_grid, parse_policy, parse_vocabulary
from abuc.values import Kind, Value, ValueRange

from policygen import RIGHTS, compatible_pair, small_policy, small_vocabulary

FIX = Path(__file__).parent / "fixtures"
CLINIC = parse_vocabulary((FIX / "clinic.ucv").read_text())
SAT, OAT = Category.SAT, Category.OAT

TWO_BY_THREE = Vocabulary({
    (SAT, "a"): AttributeEntry(Kind.TEXT, ValueRange.of_values(Kind.TEXT, ["x", "y"])),
    (OAT, "b"): AttributeEntry(Kind.INTEGER, ValueRange.interval(Kind.INTEGER, 0, 2)),
})
PERMIT_ALL = Policy("all", PolicyKind.ROP, ("h",), (Rule("r", Effect.PERMIT, (Right("read"),)),))
EMPTY = Policy("none", PolicyKind.ROP, ("h",), ())


def fixture(name: str):
    return parse_policy((FIX / f"{name}.ucp").read_text(), CLINIC)


def test_request_count_is_the_product_of_value_counts():
    u = FiniteUniverse.from_vocabulary(TWO_BY_THREE, ["read"])
    assert u.size == 6 and len(list(enumerate_requests(u))) == 6


def test_empty_attribute_list_gives_one_request_per_right():
    u = FiniteUniverse((), ("read", "write"))
    requests = list(enumerate_requests(u))
    assert [q.demanded_rights for q in requests] == [{"read"}, {"write"}]
    assert all(q.assignments == () for q in requests)


def test_cap_is_enforced():
    big = Vocabulary({(SAT, "n"): AttributeEntry(Kind.INTEGER, ValueRange.interval(Kind.INTEGER, 0, 100))})
    with pytest.raises(UniverseTooLarge):
        list(enumerate_requests(FiniteUniverse.from_vocabulary(big, ["read"], cap=100)))


def test_infinite_domain_without_grid_is_refused():
    with pytest.raises(UniverseTooLarge):
        FiniteUniverse.from_vocabulary(CLINIC, ["read"])


def test_grid_file_overrides_the_vocabulary_grid():
    grids = parse_grid((FIX / "tiny.grid").read_text(), CLINIC)
    u = FiniteUniverse.from_vocabulary(CLINIC, ["read"], grids=grids, keys=[(SAT, "age"), (Category.CNAT, "lastAccess")])
    assert u.size == 25


def test_enumeration_is_deterministic():
    u = FiniteUniverse.from_vocabulary(TWO_BY_THREE, ["read", "write"])
    assert list(enumerate_requests(u)) == list(enumerate_requests(u))


def test_permit_everything_and_empty_policies():
    u = FiniteUniverse.from_vocabulary(TWO_BY_THREE, ["read"])
    everything = partition(PERMIT_ALL, u, TWO_BY_THREE)
    assert everything.total == len(everything.Q_Y) == 6
    assert len(partition(EMPTY, u, TWO_BY_THREE, flatten=True).Q_N) == 6
    assert len(partition(EMPTY, u, TWO_BY_THREE).Q_NA) == 6


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9), st.booleans())
def test_partition_is_disjoint_and_total(seed, flatten):
    rng = random.Random(seed)
    v = small_vocabulary(rng)
    p = small_policy(rng, v, "p", "alice")
    u = FiniteUniverse.from_vocabulary(v, RIGHTS)
    part = partition(p, u, v, flatten)
    assert part.Q_Y | part.Q_N | part.Q_NA == frozenset(enumerate_requests(u))
    assert not (part.Q_Y & part.Q_N or part.Q_Y & part.Q_NA or part.Q_N & part.Q_NA)
    if flatten:
        assert not part.Q_NA


def test_intersection_check_passes_and_catches_a_mismatch():
    a, b = fixture("share_a"), fixture("share_b")
    keys = a.attributes() | b.attributes()
    u = FiniteUniverse.from_vocabulary(CLINIC, ["read"], keys=keys)
    good = intersect_policies(a, b, CLINIC).policy
    assert check_intersection(a, b, good, u, CLINIC) is None
    broken = fixture("share_broken_csp")
    ce = check_intersection(a, b, broken, u, CLINIC, flatten=True)
    assert ce is not None and (ce.expected, ce.actual) == ("N", "Y")


def test_using_one_operand_as_the_result_fails_when_the_other_denies():
    a, b = fixture("share_a"), fixture("share_b")
    u = FiniteUniverse.from_vocabulary(CLINIC, ["read"], keys=a.attributes() | b.attributes())
    assert check_intersection(a, b, a, u, CLINIC, flatten=True) is not None
    assert check_intersection(a, a, a, u, CLINIC) is None


def test_cover_check():
    wide, narrow = fixture("lastaccess_lt90"), fixture("lastaccess_lt10")
    u = FiniteUniverse.from_vocabulary(CLINIC, ["read"], keys=wide.attributes())
    assert check_cover(wide, narrow, u, CLINIC) is None
    ce = check_cover(narrow, fixture("lastaccess_gt10"), u, CLINIC)
    assert ce is not None and ce.request.get(Category.CNAT, "lastAccess").value > Value.duration(days=10)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_generated_intersections_pass_the_check(seed):
    rng = random.Random(seed)
    v = small_vocabulary(rng)
    p1, p2 = compatible_pair(rng, v)
    u = FiniteUniverse.from_vocabulary(v, RIGHTS)
    p_i = intersect_policies(p1, p2, v).policy
    assert check_intersection(p1, p2, p_i, u, v) is None
    assert check_intersection(p1, p2, p_i, u, v, flatten=True) is None
