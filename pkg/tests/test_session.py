"""Usage-session ledger: event recording, violation derivation, snapshots and pre-update."""

from __future__ import annotations

import math
import random
import threading
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abuc.engine import evaluate
from abuc.errors import ClockSkew, InsufficientResource, UnknownAttribute
from abuc.model import Decision, ObligationSpec, Outcome
from abuc.session import IndEvent, IndKind, PubEvent, PubKind, SessionLedger, augment_request
from abuc.syntax import parse_policy, parse_request, parse_vocabulary
from abuc.values import DAY, Value

FIX = Path(__file__).parent / "fixtures"
CLINIC = parse_vocabulary((FIX / "clinic.ucv").read_text())


def permit(t: int, *windows: tuple[int, int], action: str = "delete_data", rights=("read",)) -> Decision:
    obligations = tuple(ObligationSpec(action, window=w) for w in windows)
    return Decision(Outcome.PERMIT, frozenset(rights), obligations, decision_time=t, demanded_rights=frozenset(rights))


def snapshot(led: SessionLedger, subject: str, t: int, vocab=None) -> dict:
    return {a.attr: a.value for a in led.snapshot_cnat(subject, t, vocab)}


# -- record_decision --------------------------------------------------------------------------------


def test_permit_with_obligation_records_absolute_window():
    led = SessionLedger()
    events = led.record_decision(permit(100, (0, 10 * DAY)), "alice", "rec")
    assert [e.kind for e in events] == [IndKind.PERMITTED, IndKind.OBLIGED]
    obliged = events[1]
    # derived: 100 s plus ten days of 86400 s each
    assert (obliged.t, obliged.t_s, obliged.t_e) == (100, 100, 864100)


def test_deny_records_a_single_denied_event():
    led = SessionLedger()
    d = Decision(Outcome.DENY, decision_time=5, demanded_rights=frozenset({"read"}))
    (event,) = led.record_decision(d, "bob", "rec")
    assert event.kind is IndKind.DENIED and event.t == 5


def test_unflattened_decision_is_rejected():
    with pytest.raises(ValueError):
        SessionLedger().record_decision(Decision(Outcome.NOT_APPLICABLE), "bob", None)


def test_decision_older_than_the_head_is_clock_skew():
    led = SessionLedger()
    led.record_decision(permit(100), "alice", "rec")
    with pytest.raises(ClockSkew):
        led.record_decision(permit(50), "alice", "rec")


# -- record_action ---------------------------------------------------------------------------------


def test_action_inside_the_window_fulfils():
    led = SessionLedger()
    led.record_decision(permit(0, (0, 100)), "alice", "rec")
    ev = led.record_action("delete_data", "alice", "rec", 40)
    assert ev.kind is IndKind.FULFILLED and ev.t_init == 40 and ev.ref == 1
    assert led.open_obligations() == []


def test_unrelated_action_is_a_public_happening():
    led = SessionLedger()
    led.record_decision(permit(0, (0, 100)), "alice", "rec")
    ev = led.record_action("print", "alice", "rec", 40)
    assert isinstance(ev, PubEvent) and ev.kind is PubKind.HAPPENS


def test_late_action_does_not_fulfil():
    led = SessionLedger()
    led.record_decision(permit(0, (0, 100)), "alice", "rec")
    ev = led.record_action("delete_data", "alice", "rec", 150)
    assert isinstance(ev, PubEvent)
    assert len(led.open_obligations()) == 1


# -- advance_time ------------------------------------------------------------------------------------


def test_passed_deadline_is_violated():
    led = SessionLedger()
    led.record_decision(permit(0, (0, 200)), "alice", "rec")
    (v,) = led.advance_time(300)
    assert v.kind is IndKind.VIOLATED and v.t_init == 201 and v.ref == 1


def test_fulfilled_obligation_is_never_violated():
    led = SessionLedger()
    led.record_decision(permit(0, (0, 200)), "alice", "rec")
    led.record_action("delete_data", "alice", "rec", 100)
    assert led.advance_time(300) == []


def test_nothing_is_due_before_the_deadlines():
    led = SessionLedger()
    led.record_decision(permit(0, (0, 200), (0, 400)), "alice", "rec")
    assert led.advance_time(150) == []


def test_advancing_backwards_is_clock_skew():
    led = SessionLedger()
    led.advance_time(100)
    with pytest.raises(ClockSkew):
        led.advance_time(50)


def test_violated_event_must_follow_the_window():
    with pytest.raises(ValueError):
        IndEvent(IndKind.VIOLATED, "x", "a", None, 10, t_s=0, t_e=10, t_init=10, ref=0)


# -- snapshot_cnat ------------------------------------------------------------------------------------


def test_last_access_is_time_since_the_latest_permit():
    led = SessionLedger()
    led.record_decision(permit(1000), "alice", "rec")
    # derived: three days of 86400 s after the permit
    assert snapshot(led, "alice", 1000 + 3 * DAY)["lastAccess"] == Value.duration(259200)


def test_fresh_subject_has_no_violations():
    assert snapshot(SessionLedger(), "nobody", 0)["violatedObligationCount"] == Value.integer(0)


def test_expired_obligation_counts_as_violated():
    led = SessionLedger()
    led.record_decision(permit(0, (0, 10)), "alice", "rec")
    led.advance_time(20)
    snap = snapshot(led, "alice", 20, CLINIC)
    assert snap["violatedObligationCount"] == Value.integer(1)
    assert snap["hasOpenObligation.delete_data"] == Value.boolean(False)


def test_open_obligation_is_flagged_per_action():
    led = SessionLedger()
    led.record_decision(permit(0, (0, 10)), "alice", "rec")
    snap = snapshot(led, "alice", 5, CLINIC)
    assert snap["hasOpenObligation.delete_data"] == Value.boolean(True)


def test_snapshot_drops_undeclared_catalog_attributes():
    snap = snapshot(SessionLedger(), "alice", 0, CLINIC)
    assert "fulfilledObligationCount" not in snap and "hasOpenObligation" not in snap


def test_holds_at_payload_reaches_the_snapshot():
    led = SessionLedger()
    led.record_public(PubKind.HOLDS_AT, "context", [("within", Value.duration(5 * DAY))], t=1)
    assert snapshot(led, "alice", 2, CLINIC)["within"] == Value.duration(5 * DAY)


def test_undeclared_holds_at_payload_is_unknown():
    led = SessionLedger()
    led.record_public(PubKind.HOLDS_AT, "context", [("weather", Value.text("rain"))], t=1)
    with pytest.raises(UnknownAttribute):
        led.snapshot_cnat("alice", 2, CLINIC)


def test_violation_feeds_back_into_evaluation():
    rop = parse_policy((FIX / "clinic_rop.ucp").read_text(), CLINIC)
    q = parse_request((FIX / "permit_doctor.ucr").read_text(), CLINIC)
    q = q.with_assignments(tuple(a for a in q.assignments if a.attr != "violatedObligationCount"))
    led = SessionLedger()
    assert evaluate(rop, augment_request(q, led, CLINIC), CLINIC).outcome is Outcome.PERMIT
    led.record_decision(permit(0, (0, 10)), q.subject, q.object)
    led.advance_time(q.t)
    assert evaluate(rop, augment_request(q, led, CLINIC), CLINIC).outcome is Outcome.DENY


# -- pre_update ---------------------------------------------------------------------------------------


def test_pre_update_decrements():
    led = SessionLedger()
    led.set_resource("licence", 5)
    assert led.pre_update("licence", 3) == 2


def test_pre_update_refuses_without_mutation():
    led = SessionLedger()
    led.set_resource("licence", 2)
    with pytest.raises(InsufficientResource):
        led.pre_update("licence", 3)
    assert led.remaining("licence") == 2


def test_second_overdraw_fails():
    led = SessionLedger()
    led.set_resource("licence", 5)
    led.pre_update("licence", 3)
    with pytest.raises(InsufficientResource):
        led.pre_update("licence", 3)


def test_threaded_pre_updates_never_overdraw():
    led = SessionLedger()
    led.set_resource("seat", 100)
    taken: list[int] = []
    lock = threading.Lock()

    def worker(seed: int) -> None:
        rng = random.Random(seed)
        for _ in range(50):
            amount = rng.randint(1, 4)
            try:
                led.pre_update("seat", amount)
            except InsufficientResource:
                continue
            with lock:
                taken.append(amount)

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(8)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    assert led.remaining("seat") == 100 - sum(taken) >= 0


# -- ledger properties -----------------------------------------------------------------------------


@st.composite
def schedules(draw):
    """Interleaved grants with obligations, actions and clock moves, in time order."""
    steps, t = [], 0
    for _ in range(draw(st.integers(1, 15))):
        t += draw(st.integers(0, 30))
        kind = draw(st.sampled_from(["grant", "act", "tick"]))
        subject = draw(st.sampled_from(["a", "b"]))
        action = draw(st.sampled_from(["del", "notify"]))
        if kind == "grant":
            start = draw(st.integers(0, 10))
            steps.append(("grant", t, subject, action, (start, start + draw(st.integers(0, 40)))))
        else:
            steps.append((kind, t, subject, action, None))
    return steps


def run(steps) -> SessionLedger:
    led = SessionLedger()
    for kind, t, subject, action, window in steps:
        if kind == "grant":
            led.record_decision(permit(t, window, action=action), subject, "obj")
        elif kind == "act":
            led.record_action(action, subject, "obj", t)
        else:
            led.advance_time(t)
    return led


@settings(max_examples=300, deadline=None)
@given(schedules())
def test_every_obligation_closes_exactly_once_at_the_horizon(steps):
    led = run(steps)
    before = led.events
    led.advance_time(math.inf)
    assert led.events[: len(before)] == before
    closers: dict[int, list[IndEvent]] = {}
    for e in led.events:
        if isinstance(e, IndEvent) and e.kind in (IndKind.FULFILLED, IndKind.VIOLATED):
            closers.setdefault(e.ref, []).append(e)
    obliged = [i for i, e in enumerate(led.events) if isinstance(e, IndEvent) and e.kind is IndKind.OBLIGED]
    assert sorted(closers) == obliged
    assert all(len(c) == 1 for c in closers.values())


@settings(max_examples=100, deadline=None)
@given(schedules())
def test_replay_reproduces_the_ledger(steps):
    led = run(steps)
    again = SessionLedger.loads(led.dumps())
    assert again.records == led.records
    assert again.dumps() == led.dumps()


def test_file_backed_ledger_writes_through(tmp_path):
    path = tmp_path / "session.ndjson"
    led = SessionLedger(path)
    led.record_decision(permit(0, (0, 10)), "alice", "rec")
    led.set_resource("seat", 3)
    led.pre_update("seat", 1)
    reopened = SessionLedger(path)
    assert reopened.records == led.records and reopened.remaining("seat") == 2


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 20), st.lists(st.integers(1, 6), max_size=12))
def test_pre_update_sequence_is_initial_minus_successes(initial, amounts):
    led = SessionLedger()
    led.set_resource("r", initial)
    ok = 0
    for a in amounts:
        try:
            led.pre_update("r", a)
            ok += a
        except InsufficientResource:
            pass
        assert led.remaining("r") >= 0
    assert led.remaining("r") == initial - ok
