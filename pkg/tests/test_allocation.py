"""Link admission, weight-ordered reclamation and ledger accounting."""

from __future__ import annotations

import random

import pytest

from oracle import AdmitRequest, ExistingStream, force_link, oracle_admit, random_link_state
from vodsim.allocation import InvariantViolation, Link, LinkKind, replay_used
from vodsim.model import UserClass

C1, C2, C3 = UserClass.CLASS1, UserClass.CLASS2, UserClass.CLASS3


def fresh_link(capacity=100):
    return Link(LinkKind.PS_CMS, capacity, "test")


def test_admit_prefers_maximum():
    link = fresh_link(100)
    outcome = link.admit(0.0, video_id=1, user_class=C1, min_rate=8, max_rate=24, weight=0)
    assert outcome is not None
    assert outcome.allocation.rate == 24
    assert outcome.at_max
    assert outcome.plan is None
    assert link.free_bandwidth() == 76


def test_admit_degrades_to_minimum():
    link = fresh_link(30)
    link.admit(0.0, 1, C1, min_rate=8, max_rate=24, weight=0)
    outcome = link.admit(1.0, 2, C1, min_rate=5, max_rate=20, weight=0)
    assert outcome is not None
    assert outcome.allocation.rate == 5
    assert not outcome.at_max
    assert outcome.plan is None
    assert link.used == 29


def test_admit_rejects_and_leaves_link_untouched():
    link = fresh_link(20)
    link.admit(0.0, 1, C1, min_rate=10, max_rate=18, weight=0)
    before_used = link.used
    before_rates = {a: alloc.rate for a, alloc in link.allocations.items()}
    before_rows = len(link.ledger)
    outcome = link.admit(1.0, 2, C2, min_rate=5, max_rate=9, weight=0)
    assert outcome is None
    assert link.used == before_used
    assert {a: alloc.rate for a, alloc in link.allocations.items()} == before_rates
    assert len(link.ledger) == before_rows


def test_reclaim_takes_from_lowest_weight_first():
    link = fresh_link(40)
    heavy = link.admit(0.0, 1, C2, min_rate=6, max_rate=20, weight=50).allocation
    light = link.admit(0.0, 2, C2, min_rate=6, max_rate=20, weight=5).allocation
    assert link.used == 40 and link.free_bandwidth() == 0
    outcome = link.admit(1.0, 3, C2, min_rate=7, max_rate=18, weight=99)
    assert outcome is not None
    assert outcome.allocation.rate == 7
    assert outcome.plan is not None
    assert outcome.plan.victims[0][0] == light.alloc_id
    assert light.rate == 20 - outcome.plan.victims[0][1]
    assert sum(take for _, take in outcome.plan.victims) == 7
    victim_ids = [vid for vid, _ in outcome.plan.victims]
    assert heavy.alloc_id not in victim_ids or victim_ids.index(heavy.alloc_id) > 0
    assert link.used == 40


def test_reclaim_never_cuts_below_minimum():
    link = fresh_link(24)
    a = link.admit(0.0, 1, C3, min_rate=4, max_rate=12, weight=1).allocation
    b = link.admit(0.0, 2, C3, min_rate=4, max_rate=12, weight=2).allocation
    outcome = link.admit(1.0, 3, C3, min_rate=6, max_rate=14, weight=0)
    assert outcome is not None
    assert a.rate >= a.min_rate
    assert b.rate >= b.min_rate
    assert link.used <= link.capacity


def test_reclaim_ignores_other_classes():
    link = fresh_link(24)
    link.admit(0.0, 1, C1, min_rate=8, max_rate=24, weight=0)
    outcome = link.admit(1.0, 2, C2, min_rate=6, max_rate=18, weight=9)
    assert outcome is None


def test_reclaim_all_or_nothing():
    link = fresh_link(20)
    victim = link.admit(0.0, 1, C3, min_rate=4, max_rate=17, weight=0).allocation
    assert victim.rate == 17
    outcome = link.admit(1.0, 2, C3, min_rate=17, max_rate=17, weight=9)
    assert outcome is None
    assert victim.rate == 17
    assert link.used == 17


def test_plan_reclaim_empty_when_free_covers():
    link = fresh_link(50)
    link.admit(0.0, 1, C1, min_rate=8, max_rate=24, weight=0)
    plan = link.plan_reclaim(C1, 10)
    assert plan is not None
    assert plan.victims == [] and plan.total == 0


def test_release_returns_bandwidth():
    link = fresh_link(40)
    outcome = link.admit(0.0, 1, C1, min_rate=8, max_rate=24, weight=0)
    assert link.free_bandwidth() == 16
    link.release(2.0, outcome.allocation.alloc_id)
    assert link.free_bandwidth() == 40
    with pytest.raises(InvariantViolation):
        link.release(3.0, outcome.allocation.alloc_id)


def test_conservation_check_catches_tampering():
    link = fresh_link(40)
    outcome = link.admit(0.0, 1, C1, min_rate=8, max_rate=24, weight=0)
    link.check_conservation()
    outcome.allocation.rate += 1
    with pytest.raises(InvariantViolation):
        link.check_conservation()


def test_ledger_replay_matches_live_state():
    rng = random.Random(99)
    link = fresh_link(120)
    live = []
    for step in range(300):
        if live and rng.random() < 0.4:
            victim = live.pop(rng.randrange(len(live)))
            link.release(float(step), victim)
        else:
            outcome = link.admit(
                float(step), rng.randrange(30), rng.choice((C1, C2, C3)),
                min_rate=rng.randint(4, 8), max_rate=rng.randint(12, 25),
                weight=rng.randrange(10),
            )
            if outcome is not None:
                live.append(outcome.allocation.alloc_id)
        replayed = replay_used(link.ledger)
        assert replayed == {a: alloc.rate for a, alloc in link.allocations.items()}
        assert sum(replayed.values()) == link.used
        link.check_conservation()


def test_admit_validates_bounds():
    link = fresh_link(40)
    with pytest.raises(ValueError):
        link.admit(0.0, 1, C1, min_rate=0, max_rate=10, weight=0)
    with pytest.raises(ValueError):
        link.admit(0.0, 1, C1, min_rate=12, max_rate=10, weight=0)
    with pytest.raises(ValueError):
        Link(LinkKind.PS_CMS, 0)


def test_engine_matches_oracle_on_random_states():
    rng = random.Random(2024)
    for case in range(800):
        capacity, existing, request = random_link_state(rng, base_id=10_000_000 + case * 10)
        link = force_link(capacity, existing)
        expected = oracle_admit(capacity, existing, request)
        outcome = link.admit(5.0, 0, request.user_class,
                             request.min_rate, request.max_rate, weight=3)
        if expected is None:
            assert outcome is None
            assert link.used == sum(s.rate for s in existing)
            assert {a: alloc.rate for a, alloc in link.allocations.items()} == {
                s.alloc_id: s.rate for s in existing
            }
        else:
            rate, victims = expected
            assert outcome is not None
            assert outcome.allocation.rate == rate
            got = sorted(outcome.plan.victims) if outcome.plan else []
            assert got == sorted(victims)
            link.check_conservation()
