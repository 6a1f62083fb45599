"""Per-link bandwidth accounting and class-aware admission.

A link carries integer MB/s allocations, one per live stream.  Admission
is all-or-nothing: try the stream's class maximum, then its minimum, then
try to cover the minimum by reclaiming excess (allocated minus minimum)
from already-admitted streams of the same class, taking from the lowest
demand weight upward.  If even that cannot cover the minimum the request
is rejected and the link is left untouched.

Every mutation appends a ledger row, so a link's utilization over time can
be replayed exactly from its ledger without trusting the live counters.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum

from .model import UserClass


class LinkKind(Enum):
    """Which leg of the topology a link models, from the proxy's viewpoint."""

    PS_LPS = "ps_lps"
    PS_RPS = "ps_rps"
    PS_CMS = "ps_cms"


LINK_KINDS: tuple[LinkKind, ...] = (LinkKind.PS_LPS, LinkKind.PS_RPS, LinkKind.PS_CMS)


class InvariantViolation(RuntimeError):
    """Raised when link accounting would go out of bounds; indicates a bug."""


@dataclass
class Allocation:
    """One admitted stream's share of a link, in whole MB/s."""

    alloc_id: int
    video_id: int
    user_class: UserClass
    rate: int
    min_rate: int
    max_rate: int
    weight: int


@dataclass
class ReclaimPlan:
    """Rates to strip from existing allocations, lowest weight first.

    ``victims`` holds (alloc_id, amount) pairs; ``total`` is their sum.
    An empty plan is valid: it means free bandwidth alone covers the need.
    """

    victims: list[tuple[int, int]] = field(default_factory=list)
    total: int = 0


@dataclass
class LedgerRow:
    """One append-only accounting record: allocate, reclaim or release."""

    time: float
    op: str
    alloc_id: int
    video_id: int
    user_class: int
    amount: int


@dataclass
class AdmissionOutcome:
    """What admit() did: the new allocation, whether it got its maximum,
    and the reclaim plan it applied (None when no reclamation happened)."""

    allocation: Allocation
    at_max: bool
    plan: ReclaimPlan | None


class Link:
    """A directed link with fixed integer capacity in MB/s.

    Links meant to coexist (one topology) should share an ``id_source`` so
    allocation ids are unique across them; a lone link defaults to its own
    counter.  Scoping the counter this way keeps ids reproducible run to
    run instead of leaking state between simulations in one process.
    """

    def __init__(self, kind: LinkKind, capacity: int, label: str = "", id_source=None):
        if capacity <= 0:
            raise ValueError(f"capacity must be positive, got {capacity}")
        self.kind = kind
        self.capacity = capacity
        self.label = label or kind.value
        self.id_source = id_source if id_source is not None else itertools.count(1)
        self.allocations: dict[int, Allocation] = {}
        self.used = 0
        self.ledger: list[LedgerRow] = []

    def free_bandwidth(self) -> int:
        return self.capacity - self.used

    def _log(self, time: float, op: str, alloc: Allocation, amount: int) -> None:
        self.ledger.append(
            LedgerRow(time, op, alloc.alloc_id, alloc.video_id, int(alloc.user_class), amount)
        )

    def plan_reclaim(self, user_class: UserClass, needed: int) -> ReclaimPlan | None:
        """Plan how to cover ``needed`` MB/s for a new stream of this class.

        Free bandwidth counts first; any remainder must come from excess
        (rate above minimum) held by same-class allocations, visited in
        ascending weight order (ties: video id, then allocation id).
        Returns None when the need cannot be covered.
        """
        if needed < 0:
            raise ValueError("needed must be non-negative")
        remaining = needed - self.free_bandwidth()
        plan = ReclaimPlan()
        if remaining <= 0:
            return plan
        victims = sorted(
            (a for a in self.allocations.values()
             if a.user_class == user_class and a.rate > a.min_rate),
            key=lambda a: (a.weight, a.video_id, a.alloc_id),
        )
        for alloc in victims:
            take = min(alloc.rate - alloc.min_rate, remaining)
            plan.victims.append((alloc.alloc_id, take))
            plan.total += take
            remaining -= take
            if remaining == 0:
                return plan
        return None

    def _apply_reclaim(self, time: float, plan: ReclaimPlan) -> None:
        for alloc_id, take in plan.victims:
            alloc = self.allocations[alloc_id]
            if take <= 0 or alloc.rate - take < alloc.min_rate:
                raise InvariantViolation("reclaim would push a stream below its minimum")
            alloc.rate -= take
            self.used -= take
            self._log(time, "reclaim", alloc, take)

    def admit(
        self,
        time: float,
        video_id: int,
        user_class: UserClass,
        min_rate: int,
        max_rate: int,
        weight: int,
    ) -> AdmissionOutcome | None:
        """Admit a stream or reject it, leaving the link untouched on reject."""
        if not 0 < min_rate <= max_rate:
            raise ValueError(f"bad rate bounds ({min_rate}, {max_rate})")
        free = self.free_bandwidth()
        if free >= max_rate:
            rate, at_max, plan = max_rate, True, None
        elif free >= min_rate:
            rate, at_max, plan = min_rate, False, None
        else:
            plan = self.plan_reclaim(user_class, min_rate)
            if plan is None:
                return None
            self._apply_reclaim(time, plan)
            rate, at_max = min_rate, min_rate == max_rate
        alloc = Allocation(next(self.id_source), video_id, user_class,
                           rate, min_rate, max_rate, weight)
        self.allocations[alloc.alloc_id] = alloc
        self.used += rate
        if self.used > self.capacity:
            raise InvariantViolation(
                f"link {self.label} over capacity: {self.used} > {self.capacity}"
            )
        self._log(time, "allocate", alloc, rate)
        return AdmissionOutcome(alloc, at_max and rate == max_rate, plan)

    def release(self, time: float, alloc_id: int) -> Allocation:
        """Tear down an allocation and return it; unknown ids are a bug."""
        alloc = self.allocations.pop(alloc_id, None)
        if alloc is None:
            raise InvariantViolation(f"release of unknown allocation {alloc_id}")
        self.used -= alloc.rate
        if self.used < 0:
            raise InvariantViolation(f"link {self.label} used went negative")
        self._log(time, "release", alloc, alloc.rate)
        return alloc

    def check_conservation(self) -> None:
        """Assert the incremental counter equals the sum of live rates."""
        total = sum(a.rate for a in self.allocations.values())
        if total != self.used:
            raise InvariantViolation(
                f"link {self.label}: used={self.used} but allocations sum to {total}"
            )
        if not 0 <= self.used <= self.capacity:
            raise InvariantViolation(f"link {self.label}: used={self.used} out of bounds")


def replay_used(rows: list[LedgerRow]) -> dict[int, int]:
    """Rebuild final per-allocation rates from a ledger; releases drop keys."""
    rates: dict[int, int] = {}
    for row in rows:
        if row.op == "allocate":
            rates[row.alloc_id] = row.amount
        elif row.op == "reclaim":
            rates[row.alloc_id] -= row.amount
        elif row.op == "release":
            if rates.pop(row.alloc_id) != row.amount:
                raise InvariantViolation(f"ledger release mismatch for {row.alloc_id}")
        else:
            raise ValueError(f"unknown ledger op {row.op!r}")
    return rates
