"""Usage-session ledger: authorization and obligation events over time.

The ledger is append-only.  Obligation violations are derived lazily by
``advance_time`` so that the module never depends on a wall clock; the host
decides when time moves.  A ledger can be bound to a newline-delimited JSON
file, in which case every appended record is written through immediately
and the file can be replayed to an identical ledger.
"""

from __future__ import annotations

import enum
import json
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Union

from .errors import ClockSkew, InsufficientResource
from .model import Assignment, Category, Decision, Outcome, Vocabulary
from .values import Kind, Value, coerce


class IndKind(str, enum.Enum):
    PERMITTED = "permitted"
    DENIED = "denied"
    OBLIGED = "obliged"
    FULFILLED = "fulfilled"
    VIOLATED = "violated"


class PubKind(str, enum.Enum):
    HAPPENS = "happens"
    HOLDS_AT = "holdsAt"
    BROKEN = "broken"


@dataclass(frozen=True)
class IndEvent:
    """Per-consumer statement.  ``ref`` points fulfilled/violated events at their obliged event."""

    kind: IndKind
    action: str
    subject: str | None
    object: str | None
    t: int
    t_s: int | None = None
    t_e: int | None = None
    t_init: int | None = None
    ref: int | None = None

    def __post_init__(self) -> None:
        k = self.kind
        if k in (IndKind.OBLIGED, IndKind.FULFILLED, IndKind.VIOLATED):
            if self.t_s is None or self.t_e is None or self.t_s > self.t_e:
                raise ValueError(f"{k.value} event needs a window with t_s <= t_e")
        if k is IndKind.FULFILLED and not (self.t_init is not None and self.t_s <= self.t_init <= self.t_e):
            raise ValueError("fulfilled event must happen inside its window")
        if k is IndKind.VIOLATED and not (self.t_init is not None and self.t_init > self.t_e):
            raise ValueError("violated event must start after the window closed")
        if k in (IndKind.FULFILLED, IndKind.VIOLATED) and self.ref is None:
            raise ValueError(f"{k.value} event must reference its obliged event")


@dataclass(frozen=True)
class PubEvent:
    kind: PubKind
    name: str
    payload: tuple[tuple[str, Value], ...] = ()
    t: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "payload", tuple(sorted(dict(self.payload).items())))


Event = Union[IndEvent, PubEvent]


@dataclass(frozen=True)
class ResourceRecord:
    """Resource-table change: ``set`` installs a quantity, ``take`` is a successful pre-update."""

    op: str
    object: str
    amount: int


Record = Union[IndEvent, PubEvent, ResourceRecord]

# derived CNAT attributes and their kinds
CATALOG = {
    "lastAccess": Kind.DURATION,
    "violatedObligationCount": Kind.INTEGER,
    "fulfilledObligationCount": Kind.INTEGER,
    "hasOpenObligation": Kind.BOOLEAN,
}
OPEN_PREFIX = "hasOpenObligation."


class SessionLedger:
    def __init__(self, path: str | Path | None = None) -> None:
        self._records: list[Record] = []
        self._events: list[Event] = []
        self._resources: dict[str, int] = {}
        self._closed: set[int] = set()  # indices of obliged events already fulfilled or violated
        self._clock: int = -(10**18)
        self._lock = threading.RLock()
        self._path = Path(path) if path is not None else None
        if self._path is not None and self._path.exists():
            for line in self._path.read_text().splitlines():
                if line.strip():
                    self._apply(record_from_json(json.loads(line)))

    # -- views ----------------------------------------------------------------

    @property
    def events(self) -> tuple[Event, ...]:
        return tuple(self._events)

    @property
    def records(self) -> tuple[Record, ...]:
        return tuple(self._records)

    @property
    def head(self) -> int | None:
        """Time of the latest event, None for an empty ledger."""
        return self._events[-1].t if self._events else None

    @property
    def clock(self) -> int | None:
        return None if self._clock == -(10**18) else self._clock

    def remaining(self, obj: str) -> int:
        return self._resources.get(obj, 0)

    def open_obligations(self) -> list[tuple[int, IndEvent]]:
        return [
            (i, e) for i, e in enumerate(self._events)
            if isinstance(e, IndEvent) and e.kind is IndKind.OBLIGED and i not in self._closed
        ]

    # -- internal ---------------------------------------------------------------

    def _apply(self, rec: Record) -> None:
        self._records.append(rec)
        if isinstance(rec, ResourceRecord):
            if rec.op == "set":
                self._resources[rec.object] = rec.amount
            else:
                self._resources[rec.object] = self._resources.get(rec.object, 0) - rec.amount
            return
        self._events.append(rec)
        self._clock = max(self._clock, rec.t)
        if isinstance(rec, IndEvent) and rec.kind in (IndKind.FULFILLED, IndKind.VIOLATED):
            self._closed.add(rec.ref)

    def _append(self, rec: Record) -> None:
        self._apply(rec)
        if self._path is not None:
            with self._path.open("a") as fh:
                fh.write(record_to_line(rec) + "\n")

    def _check_time(self, t: int) -> None:
        if t < self._clock:
            raise ClockSkew(f"time {t} precedes the ledger clock {self._clock}")

    # -- operations ---------------------------------------------------------------

    def record_decision(self, d: Decision, subject: str | None, obj: str | None) -> list[IndEvent]:
        if d.outcome not in (Outcome.PERMIT, Outcome.DENY):
            raise ValueError("only flattened decisions (Permit or Deny) can be recorded")
        t = d.decision_time
        out: list[IndEvent] = []
        with self._lock:
            self._check_time(t)
            if d.outcome is Outcome.PERMIT:
                for right in sorted(d.granted_rights):
                    out.append(IndEvent(IndKind.PERMITTED, right, subject, obj, t))
                for o in d.obligations:
                    if o.window is not None and not o.negated:
                        ws, we = o.window
                        out.append(IndEvent(IndKind.OBLIGED, o.action, subject, obj, t, t_s=t + ws, t_e=t + we))
            else:
                for right in sorted(d.demanded_rights) or [""]:
                    out.append(IndEvent(IndKind.DENIED, right, subject, obj, t))
            for e in out:
                self._append(e)
        return out

    def record_action(self, action: str, subject: str | None, obj: str | None, t: int) -> Event:
        with self._lock:
            self._check_time(t)
            candidates = [
                (e.t_e, i, e) for i, e in self.open_obligations()
                if (e.action, e.subject, e.object) == (action, subject, obj) and e.t_s <= t <= e.t_e
            ]
            if candidates:
                _, i, ob = min(candidates, key=lambda c: (c[0], c[1]))
                ev: Event = IndEvent(IndKind.FULFILLED, action, subject, obj, t, ob.t_s, ob.t_e, t_init=t, ref=i)
            else:
                payload = tuple((k, Value.text(v)) for k, v in (("subject", subject), ("object", obj)) if v is not None)
                ev = PubEvent(PubKind.HAPPENS, action, payload, t)
            self._append(ev)
            return ev

    def record_public(self, kind: PubKind, name: str, payload: Iterable[tuple[str, Value]] = (), t: int = 0) -> PubEvent:
        with self._lock:
            self._check_time(t)
            ev = PubEvent(kind, name, tuple(payload), t)
            self._append(ev)
            return ev

    def advance_time(self, t_now: int | float) -> list[IndEvent]:
        """Move the clock to ``t_now`` and record every obligation whose deadline passed.

        ``math.inf`` closes every open obligation; each violation is then
        stamped at the later of the clock and its own violation time.
        """
        with self._lock:
            if t_now < self._clock:
                raise ClockSkew(f"time {t_now} precedes the ledger clock {self._clock}")
            due = sorted(
                ((e.t_e, i, e) for i, e in self.open_obligations() if e.t_e < t_now),
                key=lambda c: (c[0], c[1]),
            )
            out = []
            for _, i, ob in due:
                t_init = ob.t_e + 1
                t = int(t_now) if not math.isinf(t_now) else max(self._clock, t_init)
                ev = IndEvent(IndKind.VIOLATED, ob.action, ob.subject, ob.object, t, ob.t_s, ob.t_e, t_init=t_init, ref=i)
                self._append(ev)
                out.append(ev)
            if not math.isinf(t_now):
                self._clock = max(self._clock, int(t_now))
            return out

    def snapshot_cnat(self, subject: str | None, t: int, vocab: Vocabulary | None = None) -> tuple[Assignment, ...]:
        """Derived CNAT attributes of ``subject`` at time ``t``.

        With a vocabulary, catalog attributes it does not declare are left
        out, and ``holdsAt`` payload names it does not declare raise
        ``UnknownAttribute``.
        """
        events = [e for e in self.events if e.t <= t]
        mine = [(i, e) for i, e in enumerate(self._events) if isinstance(e, IndEvent) and e.subject == subject and e.t <= t]
        closed = {e.ref for _, e in mine if e.kind in (IndKind.FULFILLED, IndKind.VIOLATED)}
        obliged = [(i, e) for i, e in mine if e.kind is IndKind.OBLIGED]
        open_actions = sorted({e.action for i, e in obliged if i not in closed})
        derived: dict[str, Value] = {
            "violatedObligationCount": Value.integer(sum(1 for _, e in mine if e.kind is IndKind.VIOLATED)),
            "fulfilledObligationCount": Value.integer(sum(1 for _, e in mine if e.kind is IndKind.FULFILLED)),
            "hasOpenObligation": Value.boolean(bool(open_actions)),
        }
        permitted = [e.t for _, e in mine if e.kind is IndKind.PERMITTED]
        if permitted:
            derived["lastAccess"] = Value.duration(max(0, t - max(permitted)))
        for action in open_actions:
            derived[OPEN_PREFIX + action] = Value.boolean(True)
        if vocab is not None:
            for (cat, name), entry in vocab.entries.items():
                if cat is Category.CNAT and name.startswith(OPEN_PREFIX) and name not in derived:
                    derived[name] = Value.boolean(False)
            derived = {k: v for k, v in derived.items() if (Category.CNAT, k) in vocab}
        latest: dict[str, PubEvent] = {}
        for e in events:
            if isinstance(e, PubEvent) and e.kind is PubKind.HOLDS_AT:
                latest[e.name] = e
        for name in sorted(latest):
            for k, val in latest[name].payload:
                if vocab is not None:
                    entry = vocab.entry(Category.CNAT, k)
                    val = coerce(val, entry.kind)
                derived[k] = val
        if vocab is not None:
            derived = {k: coerce(v, vocab.entry(Category.CNAT, k).kind) for k, v in derived.items()}
        return tuple(Assignment(Category.CNAT, k, v) for k, v in sorted(derived.items()))

    def set_resource(self, obj: str, amount: int) -> None:
        if amount < 0:
            raise ValueError("resource quantity must be non-negative")
        with self._lock:
            self._append(ResourceRecord("set", obj, amount))

    def pre_update(self, obj: str, amount: int) -> int:
        """Atomically take ``amount`` of ``obj``; returns what remains."""
        if amount <= 0:
            raise ValueError("pre-update amount must be positive")
        with self._lock:
            left = self._resources.get(obj, 0)
            if left < amount:
                raise InsufficientResource(f"{obj}: {amount} requested, {left} remaining")
            self._append(ResourceRecord("take", obj, amount))
            return self._resources[obj]

    # -- persistence ----------------------------------------------------------------

    def dumps(self) -> str:
        return "".join(record_to_line(r) + "\n" for r in self._records)

    @classmethod
    def loads(cls, text: str) -> SessionLedger:
        led = cls()
        for line in text.splitlines():
            if line.strip():
                led._apply(record_from_json(json.loads(line)))
        return led


def _value_json(v: Value) -> dict:
    data = v.data
    if isinstance(data, Fraction):
        data = f"{data.numerator}/{data.denominator}"
    return {"kind": v.kind.value, "data": data}


def _value_from_json(d: dict) -> Value:
    kind = Kind(d["kind"])
    data = d["data"]
    if kind is Kind.DECIMAL:
        data = Fraction(data)
    return Value(kind, data)


def record_to_line(rec: Record) -> str:
    if isinstance(rec, ResourceRecord):
        obj: dict = {"type": "resource", "op": rec.op, "object": rec.object, "amount": rec.amount}
    elif isinstance(rec, IndEvent):
        obj = {
            "type": "ind", "kind": rec.kind.value, "action": rec.action, "subject": rec.subject,
            "object": rec.object, "t": rec.t, "t_s": rec.t_s, "t_e": rec.t_e, "t_init": rec.t_init, "ref": rec.ref,
        }
    else:
        obj = {
            "type": "pub", "kind": rec.kind.value, "name": rec.name,
            "payload": [[k, _value_json(v)] for k, v in rec.payload], "t": rec.t,
        }
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def record_from_json(d: dict) -> Record:
    typ = d.get("type")
    if typ == "resource":
        return ResourceRecord(d["op"], d["object"], d["amount"])
    if typ == "ind":
        return IndEvent(
            IndKind(d["kind"]), d["action"], d["subject"], d["object"], d["t"],
            d["t_s"], d["t_e"], d["t_init"], d["ref"],
        )
    if typ == "pub":
        return PubEvent(PubKind(d["kind"]), d["name"], tuple((k, _value_from_json(v)) for k, v in d["payload"]), d["t"])
    raise ValueError(f"unknown ledger record type {typ!r}")


def augment_request(q, ledger: SessionLedger, vocab: Vocabulary | None = None):
    """Request with the ledger's CNAT snapshot for ``q.subject`` at ``q.t`` merged in."""
    return q.with_assignments(ledger.snapshot_cnat(q.subject, q.t, vocab))


__all__ = [
    "CATALOG",
    "Event",
    "IndEvent",
    "IndKind",
    "PubEvent",
    "PubKind",
    "ResourceRecord",
    "SessionLedger",
    "augment_request",
    "record_from_json",
    "record_to_line",
]
