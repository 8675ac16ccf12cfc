"""Brute-force request-space enumeration over finite attribute grids.

The oracle only uses the evaluation engine, never the symbolic machinery of
``ratification``, so it can serve as independent ground truth for it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator

from .engine import evaluate
from .errors import UniverseTooLarge
from .model import CATEGORY_ORDER, Assignment, AttrKey, Outcome, Policy, Request, Vocabulary
from .values import Value

DEFAULT_CAP = 10**6


@dataclass(frozen=True)
class FiniteUniverse:
    attributes: tuple[tuple[AttrKey, tuple[Value, ...]], ...]
    rights: tuple[str, ...] = ()
    cap: int = DEFAULT_CAP

    @classmethod
    def from_vocabulary(
        cls,
        v: Vocabulary,
        rights: Iterable[str] = (),
        cap: int = DEFAULT_CAP,
        grids: dict[AttrKey, Iterable[Value]] | None = None,
        keys: Iterable[AttrKey] | None = None,
    ) -> FiniteUniverse:
        """Enumerate declared attributes by their grid, or by their domain when that is finite.

        ``grids`` overrides the vocabulary's grids per attribute.  ``keys``
        limits the universe to those attributes; by default it spans the
        whole vocabulary.
        """
        attrs = []
        wanted = v.keys() if keys is None else [k for k in v.keys() if k in set(keys)]
        for key in wanted:
            entry = v.entry(*key)
            if grids and key in grids:
                values = tuple(sorted(set(grids[key])))
            else:
                values = entry.enumeration()
            if values is None:
                raise UniverseTooLarge(
                    f"attribute {key[0].value}.{key[1]} has an infinite domain and no grid to sample it"
                )
            attrs.append((key, tuple(values)))
        return cls(tuple(attrs), tuple(sorted(set(rights))), cap)

    @property
    def size(self) -> int:
        return math.prod(len(vals) for _, vals in self.attributes) * len(self.rights)

    def with_rights(self, rights: Iterable[str]) -> FiniteUniverse:
        return FiniteUniverse(self.attributes, tuple(sorted(set(rights))), self.cap)


def enumerate_requests(u: FiniteUniverse, rights: Iterable[str] | None = None) -> Iterator[Request]:
    """Every total assignment times every single right, in a fixed order."""
    rights = tuple(sorted(set(rights))) if rights is not None else u.rights
    total = math.prod(len(vals) for _, vals in u.attributes) * len(rights)
    if total > u.cap:
        raise UniverseTooLarge(f"{total} requests exceed the cap of {u.cap}")
    keys = [k for k, _ in sorted(u.attributes, key=lambda kv: (CATEGORY_ORDER[kv[0][0]], kv[0][1]))]
    lists = [dict(u.attributes)[k] for k in keys]
    for combo in itertools.product(*lists):
        assignments = tuple(Assignment(k[0], k[1], val) for k, val in zip(keys, combo))
        for right in rights:
            yield Request(assignments, frozenset({right}))


@dataclass(frozen=True)
class RequestPartition:
    Q_Y: frozenset[Request]
    Q_N: frozenset[Request]
    Q_NA: frozenset[Request]
    order: tuple[Request, ...] = ()

    @property
    def total(self) -> int:
        return len(self.Q_Y) + len(self.Q_N) + len(self.Q_NA)

    def label(self, q: Request) -> str:
        if q in self.Q_Y:
            return "Y"
        if q in self.Q_N:
            return "N"
        return "NA"


def partition(p: Policy, u: FiniteUniverse, v: Vocabulary, flatten: bool = False) -> RequestPartition:
    """Sort every enumerated request into permitted, denied and not applicable.

    Indeterminate results count as not applicable in the unflattened
    reading; flattening moves both into the denied set.
    """
    ys, ns, nas, order = [], [], [], []
    for q in enumerate_requests(u):
        order.append(q)
        outcome = evaluate(p, q, v, flatten=flatten).outcome
        if outcome is Outcome.PERMIT:
            ys.append(q)
        elif outcome is Outcome.DENY:
            ns.append(q)
        else:
            nas.append(q)
    return RequestPartition(frozenset(ys), frozenset(ns), frozenset(nas), tuple(order))


@dataclass(frozen=True)
class Counterexample:
    request: Request
    expected: str
    actual: str


def check_intersection(p1: Policy, p2: Policy, p_i: Policy, u: FiniteUniverse, v: Vocabulary, flatten: bool = False) -> Counterexample | None:
    """Compare ``p_i`` with the set algebra of ``p1`` and ``p2``.

    Permitted requests must be exactly those both permit.  Unflattened,
    denied requests must be exactly those either denies; flattened, the
    rest is denied.
    """
    a = partition(p1, u, v, flatten)
    b = partition(p2, u, v, flatten)
    c = partition(p_i, u, v, flatten)
    for q in c.order:
        if q in a.Q_Y and q in b.Q_Y:
            want = "Y"
        elif flatten or q in a.Q_N or q in b.Q_N:
            want = "N"
        else:
            want = "NA"
        got = c.label(q)
        if got != want:
            return Counterexample(q, want, got)
    return None


def check_cover(r_wide: Policy, r_narrow: Policy, u: FiniteUniverse, v: Vocabulary) -> Counterexample | None:
    """Every request ``r_narrow`` permits must also be permitted by ``r_wide``."""
    wide = partition(r_wide, u, v, flatten=True)
    narrow = partition(r_narrow, u, v, flatten=True)
    for q in narrow.order:
        if q in narrow.Q_Y and q not in wide.Q_Y:
            return Counterexample(q, "Y", "N")
    return None


__all__ = [
    "DEFAULT_CAP",
    "Counterexample",
    "FiniteUniverse",
    "RequestPartition",
    "check_cover",
    "check_intersection",
    "enumerate_requests",
    "partition",
]
