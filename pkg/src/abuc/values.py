"""Typed attribute values and exact value-range arithmetic.

Ordered kinds (integer, decimal, timestamp, duration) are represented as a
normalized union of intervals.  Unordered kinds (text, boolean) are an
explicit member set plus a ``complemented`` flag, so that "every text value
except a and b" stays finite.

Integer-valued kinds are discrete: open bounds are rewritten to closed ones
(``x < 10`` becomes ``x <= 9``) so that structural equality of two ranges is
the same thing as set equality.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Union

from .errors import KindMismatch


class Kind(str, enum.Enum):
    TEXT = "text"
    INTEGER = "integer"
    DECIMAL = "decimal"
    BOOLEAN = "boolean"
    TIMESTAMP = "timestamp"
    DURATION = "duration"

    @property
    def ordered(self) -> bool:
        return self in _ORDERED

    @property
    def discrete(self) -> bool:
        return self in _DISCRETE


_ORDERED = frozenset({Kind.INTEGER, Kind.DECIMAL, Kind.TIMESTAMP, Kind.DURATION})
_DISCRETE = frozenset({Kind.INTEGER, Kind.TIMESTAMP, Kind.DURATION})

Number = Union[int, Fraction]

SECOND = 1
MINUTE = 60
HOUR = 3600
DAY = 86400
WEEK = 7 * DAY


@dataclass(frozen=True, order=False)
class Value:
    """A single attribute value tagged with its kind.

    ``data`` is a ``str`` for text, ``bool`` for boolean, ``Fraction`` for
    decimal and ``int`` for the integer-valued kinds (timestamps are epoch
    seconds, durations are seconds).
    """

    kind: Kind
    data: object

    def __post_init__(self) -> None:
        kind, data = self.kind, self.data
        if kind is Kind.TEXT:
            ok = isinstance(data, str)
        elif kind is Kind.BOOLEAN:
            ok = isinstance(data, bool)
        elif kind is Kind.DECIMAL:
            if isinstance(data, int) and not isinstance(data, bool):
                object.__setattr__(self, "data", Fraction(data))
                ok = True
            else:
                ok = isinstance(data, Fraction)
        else:
            ok = isinstance(data, int) and not isinstance(data, bool)
        if not ok:
            raise KindMismatch(f"{data!r} is not a valid {kind.value} value")
        if kind is Kind.DURATION and data < 0:
            raise ValueError(f"duration must be non-negative, got {data}")

    def __lt__(self, other: Value) -> bool:
        return _sort_key(self) < _sort_key(other)

    def __repr__(self) -> str:
        return f"Value({self.kind.value}, {self.data!r})"

    @classmethod
    def text(cls, s: str) -> Value:
        return cls(Kind.TEXT, s)

    @classmethod
    def integer(cls, n: int) -> Value:
        return cls(Kind.INTEGER, n)

    @classmethod
    def decimal(cls, x: Number | str) -> Value:
        return cls(Kind.DECIMAL, Fraction(x))

    @classmethod
    def boolean(cls, b: bool) -> Value:
        return cls(Kind.BOOLEAN, b)

    @classmethod
    def timestamp(cls, seconds: int) -> Value:
        return cls(Kind.TIMESTAMP, seconds)

    @classmethod
    def duration(cls, seconds: int = 0, *, days: int = 0, hours: int = 0, minutes: int = 0) -> Value:
        return cls(Kind.DURATION, seconds + days * DAY + hours * HOUR + minutes * MINUTE)


def _sort_key(v: Value) -> tuple:
    # total order across kinds, used only for canonical ordering
    return (v.kind.value, v.data)


def coerce(value: Value, kind: Kind) -> Value:
    """Reinterpret an integer literal as another numeric kind.

    Any other cross-kind conversion raises ``KindMismatch``.
    """
    if value.kind is kind:
        return value
    if value.kind is Kind.INTEGER and kind in (Kind.DECIMAL, Kind.TIMESTAMP, Kind.DURATION):
        return Value(kind, value.data)
    raise KindMismatch(f"cannot use a {value.kind.value} value where {kind.value} is expected")


@dataclass(frozen=True)
class Interval:
    """Interval over numbers; ``None`` bounds are infinite (and always open)."""

    lo: Number | None
    hi: Number | None
    lo_closed: bool = True
    hi_closed: bool = True

    def __contains__(self, x: Number) -> bool:
        if self.lo is not None and (x < self.lo or (x == self.lo and not self.lo_closed)):
            return False
        if self.hi is not None and (x > self.hi or (x == self.hi and not self.hi_closed)):
            return False
        return True


def _normalize_interval(iv: Interval, discrete: bool) -> Interval | None:
    lo, hi, lc, hc = iv.lo, iv.hi, iv.lo_closed, iv.hi_closed
    if lo is None:
        lc = False
    if hi is None:
        hc = False
    if discrete:
        if lo is not None:
            lo = math.ceil(lo) if lc else math.floor(lo) + 1
            lc = True
        if hi is not None:
            hi = math.floor(hi) if hc else math.ceil(hi) - 1
            hc = True
        if lo is not None and hi is not None and lo > hi:
            return None
    else:
        if lo is not None and hi is not None:
            if lo > hi or (lo == hi and not (lc and hc)):
                return None
    return Interval(lo, hi, lc, hc)


def _lo_key(iv: Interval) -> tuple:
    # sort intervals by lower bound; -inf first, closed before open at equal bound
    if iv.lo is None:
        return (0, 0, 0)
    return (1, iv.lo, 0 if iv.lo_closed else 1)


def _touches(a: Interval, b: Interval, discrete: bool) -> bool:
    """True if ``b`` (which starts no earlier than ``a``) overlaps or abuts ``a``."""
    if a.hi is None or b.lo is None:
        return True
    if discrete:
        return b.lo <= a.hi + 1
    if b.lo < a.hi:
        return True
    return b.lo == a.hi and (a.hi_closed or b.lo_closed)


def _max_hi(a: Interval, b: Interval) -> tuple:
    if a.hi is None or b.hi is None:
        return None, False
    if a.hi > b.hi:
        return a.hi, a.hi_closed
    if b.hi > a.hi:
        return b.hi, b.hi_closed
    return a.hi, a.hi_closed or b.hi_closed


def _normalize_intervals(ivs: Iterable[Interval], discrete: bool) -> tuple[Interval, ...]:
    cleaned = [n for n in (_normalize_interval(iv, discrete) for iv in ivs) if n is not None]
    cleaned.sort(key=_lo_key)
    out: list[Interval] = []
    for iv in cleaned:
        if out and _touches(out[-1], iv, discrete):
            prev = out[-1]
            hi, hc = _max_hi(prev, iv)
            out[-1] = Interval(prev.lo, hi, prev.lo_closed, hc)
        else:
            out.append(iv)
    return tuple(out)


@dataclass(frozen=True)
class ValueRange:
    """A set of values of one kind.

    Build instances with the classmethod constructors; the raw constructor
    does not normalize.
    """

    kind: Kind
    intervals: tuple[Interval, ...] = ()
    members: frozenset = field(default_factory=frozenset)
    complemented: bool = False

    # -- constructors -------------------------------------------------------

    @classmethod
    def _ordered(cls, kind: Kind, ivs: Iterable[Interval]) -> ValueRange:
        ivs = _normalize_intervals(ivs, kind.discrete)
        if kind is Kind.DURATION:
            ivs = _normalize_intervals(_clip_nonnegative(ivs), True)
        return cls(kind, ivs)

    @classmethod
    def _unordered(cls, kind: Kind, members: Iterable, complemented: bool) -> ValueRange:
        members = frozenset(members)
        if kind is Kind.BOOLEAN and complemented:
            members, complemented = frozenset({False, True}) - members, False
        return cls(kind, members=members, complemented=complemented)

    @classmethod
    def empty(cls, kind: Kind) -> ValueRange:
        if kind.ordered:
            return cls(kind)
        return cls._unordered(kind, (), False)

    @classmethod
    def universal(cls, kind: Kind) -> ValueRange:
        if kind.ordered:
            return cls._ordered(kind, [Interval(None, None, False, False)])
        return cls._unordered(kind, (), True)

    @classmethod
    def interval(
        cls,
        kind: Kind,
        lo: Number | None,
        hi: Number | None,
        lo_closed: bool = True,
        hi_closed: bool = True,
    ) -> ValueRange:
        if not kind.ordered:
            raise KindMismatch(f"{kind.value} values have no order; intervals are not allowed")
        return cls._ordered(kind, [Interval(lo, hi, lo_closed, hi_closed)])

    @classmethod
    def from_intervals(cls, kind: Kind, ivs: Iterable[Interval]) -> ValueRange:
        if not kind.ordered:
            raise KindMismatch(f"{kind.value} values have no order; intervals are not allowed")
        return cls._ordered(kind, ivs)

    @classmethod
    def of_values(cls, kind: Kind, values: Iterable[Value | object], complemented: bool = False) -> ValueRange:
        datas = []
        for v in values:
            if isinstance(v, Value):
                v = coerce(v, kind).data
            else:
                v = Value(kind, v).data
            datas.append(v)
        if kind.ordered:
            if complemented:
                return cls._ordered(kind, [Interval(d, d) for d in datas]).complement()
            return cls._ordered(kind, [Interval(d, d) for d in datas])
        return cls._unordered(kind, datas, complemented)

    @classmethod
    def point(cls, value: Value) -> ValueRange:
        return cls.of_values(value.kind, [value])

    # -- queries --------------------------------------------------------------

    def is_empty(self) -> bool:
        if self.kind.ordered:
            return not self.intervals
        return not self.members and not self.complemented

    def is_finite(self) -> bool:
        if self.kind.ordered:
            if not self.kind.discrete:
                return all(iv.lo == iv.hi for iv in self.intervals)
            return all(iv.lo is not None and iv.hi is not None for iv in self.intervals)
        return not self.complemented

    def __contains__(self, x: Value | object) -> bool:
        if isinstance(x, Value):
            if x.kind is not self.kind:
                try:
                    x = coerce(x, self.kind)
                except KindMismatch:
                    return False
            x = x.data
        if self.kind.ordered:
            return any(x in iv for iv in self.intervals)
        return (x in self.members) != self.complemented

    def values(self) -> list[Value]:
        """Enumerate a finite range in ascending order."""
        if not self.is_finite():
            raise ValueError("range is infinite")
        if self.kind.ordered:
            out = []
            for iv in self.intervals:
                if self.kind.discrete:
                    out.extend(Value(self.kind, n) for n in range(iv.lo, iv.hi + 1))
                else:
                    out.append(Value(self.kind, iv.lo))
            return out
        return sorted(Value(self.kind, m) for m in self.members)

    def count_in(self, grid: Iterable[Value]) -> int:
        return sum(1 for g in grid if g in self)

    # -- algebra --------------------------------------------------------------

    def _check(self, other: ValueRange) -> None:
        if self.kind is not other.kind:
            raise KindMismatch(f"cannot combine {self.kind.value} range with {other.kind.value} range")

    def complement(self) -> ValueRange:
        """Complement relative to every value of this kind."""
        if not self.kind.ordered:
            return ValueRange._unordered(self.kind, self.members, not self.complemented)
        gaps: list[Interval] = []
        prev_hi: Number | None = None
        prev_closed = False
        started = False
        for iv in self.intervals:
            if not started:
                if iv.lo is not None:
                    gaps.append(Interval(None, iv.lo, False, not iv.lo_closed))
                started = True
            else:
                gaps.append(Interval(prev_hi, iv.lo, not prev_closed, not iv.lo_closed))
            prev_hi, prev_closed = iv.hi, iv.hi_closed
            if iv.hi is None:
                break
        else:
            if not started:
                gaps.append(Interval(None, None, False, False))
            elif prev_hi is not None:
                gaps.append(Interval(prev_hi, None, not prev_closed, False))
        return ValueRange._ordered(self.kind, gaps)

    def intersect(self, other: ValueRange) -> ValueRange:
        self._check(other)
        if self.kind.ordered:
            out = []
            for a in self.intervals:
                for b in other.intervals:
                    lo, lc = _max_lo(a, b)
                    hi, hc = _min_hi(a, b)
                    out.append(Interval(lo, hi, lc, hc))
            return ValueRange._ordered(self.kind, out)
        a, b = self, other
        if not a.complemented and not b.complemented:
            return ValueRange._unordered(a.kind, a.members & b.members, False)
        if a.complemented and b.complemented:
            return ValueRange._unordered(a.kind, a.members | b.members, True)
        plain, comp = (a, b) if b.complemented else (b, a)
        return ValueRange._unordered(a.kind, plain.members - comp.members, False)

    def union(self, other: ValueRange) -> ValueRange:
        self._check(other)
        if self.kind.ordered:
            return ValueRange._ordered(self.kind, self.intervals + other.intervals)
        return self.complement().intersect(other.complement()).complement()

    def difference(self, other: ValueRange) -> ValueRange:
        self._check(other)
        return self.intersect(other.complement())

    def issubset(self, other: ValueRange) -> bool:
        self._check(other)
        return self.difference(other).is_empty()

    def __and__(self, other: ValueRange) -> ValueRange:
        return self.intersect(other)

    def __or__(self, other: ValueRange) -> ValueRange:
        return self.union(other)

    def __le__(self, other: ValueRange) -> bool:
        return self.issubset(other)


def _clip_nonnegative(ivs: Iterable[Interval]) -> list[Interval]:
    out = []
    for iv in ivs:
        lo, lc = iv.lo, iv.lo_closed
        if lo is None or lo < 0:
            lo, lc = 0, True
        out.append(Interval(lo, iv.hi, lc, iv.hi_closed))
    return out


def _max_lo(a: Interval, b: Interval) -> tuple:
    if a.lo is None:
        return b.lo, b.lo_closed
    if b.lo is None:
        return a.lo, a.lo_closed
    if a.lo > b.lo:
        return a.lo, a.lo_closed
    if b.lo > a.lo:
        return b.lo, b.lo_closed
    return a.lo, a.lo_closed and b.lo_closed


def _min_hi(a: Interval, b: Interval) -> tuple:
    if a.hi is None:
        return b.hi, b.hi_closed
    if b.hi is None:
        return a.hi, a.hi_closed
    if a.hi < b.hi:
        return a.hi, a.hi_closed
    if b.hi < a.hi:
        return b.hi, b.hi_closed
    return a.hi, a.hi_closed and b.hi_closed


def range_intersect(a: ValueRange, b: ValueRange) -> ValueRange:
    return a.intersect(b)


def range_subset(a: ValueRange, b: ValueRange) -> bool:
    return a.issubset(b)
