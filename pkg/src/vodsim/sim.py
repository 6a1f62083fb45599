"""Discrete-event simulation driving the ring, the agent and the metrics.

The event loop is a binary heap keyed by (time, sequence number), so ties
break in insertion order and every run is a pure function of its seed and
configuration.  Four event kinds exist: request arrivals, stream
completions, agent tours and metric samples.  Completions are cancelled
lazily: each live stream carries a generation counter, bumped whenever a
reclaim changes its rate, and stale completion events are dropped when
popped.

Stream progress is integrated exactly: every rate change settles the bytes
sent so far at the old rate before the new rate takes effect, so the sum
of per-stream bytes matches an independent replay of the link ledgers.
"""

from __future__ import annotations

import dataclasses
import hashlib
import heapq
import itertools
import random
from dataclasses import dataclass, field

from .agent import AgentTourReport, agent_tour, schedule_next_tour
from .allocation import Allocation, Link
from .config import SimConfig
from .metrics import Counters, LinkLedger, MetricsBundle
from .model import Catalog, UserClass, build_catalog
from .topology import (
    RouteSource,
    World,
    build_world,
    handle_request,
    seed_initial_placement,
)

EV_ARRIVAL, EV_COMPLETION, EV_TOUR, EV_SAMPLE = range(4)


def generate_arrival(
    rng: random.Random, config: SimConfig
) -> tuple[float, int, int, UserClass]:
    """Draw the next request: (interarrival, proxy, video, class).

    Videos are drawn tier-first against the configured popularity mix,
    then uniformly inside the tier.  Tier membership here is the static
    id-range assignment, deliberately independent of any re-tiering the
    agent performs, so the offered workload does not drift mid-run.
    """
    dt = rng.expovariate(config.total_arrival_rate)
    proxy_id = rng.randrange(config.num_proxies)
    quarter = config.num_videos // 4
    draw = rng.random()
    if draw < config.tier_mix[0]:
        video_id = rng.randrange(quarter)
    elif draw < config.tier_mix[0] + config.tier_mix[1]:
        video_id = quarter + rng.randrange(quarter)
    else:
        video_id = 2 * quarter + rng.randrange(config.num_videos - 2 * quarter)
    draw = rng.random()
    if draw < config.class_mix[0]:
        user_class = UserClass.CLASS1
    elif draw < config.class_mix[0] + config.class_mix[1]:
        user_class = UserClass.CLASS2
    else:
        user_class = UserClass.CLASS3
    return dt, proxy_id, video_id, user_class


class StreamProgress:
    """Byte-exact progress of one admitted stream.

    ``current_rate`` mirrors the allocation's rate as of the last settle;
    the allocation itself may already have been cut by a reclaim, so the
    mirror is what past bytes are integrated with.
    """

    __slots__ = (
        "alloc", "link", "proxy_id", "source", "size_mb",
        "bytes_sent", "last_change", "current_rate", "generation", "completion_time",
    )

    def __init__(self, alloc: Allocation, link: Link, proxy_id: int,
                 source: RouteSource, size_mb: int, now: float):
        self.alloc = alloc
        self.link = link
        self.proxy_id = proxy_id
        self.source = source
        self.size_mb = size_mb
        self.bytes_sent = 0.0
        self.last_change = now
        self.current_rate = alloc.rate
        self.generation = 0
        self.completion_time = now + size_mb / alloc.rate

    @property
    def video_id(self) -> int:
        return self.alloc.video_id

    def settle(self, now: float) -> None:
        """Bank bytes sent at the current rate up to ``now``."""
        self.bytes_sent += self.current_rate * (now - self.last_change)
        self.last_change = now

    def on_rate_change(self, now: float) -> bool:
        """Absorb a rate change already applied to the allocation.

        Returns True when the completion time moved and the stream needs a
        fresh completion event.
        """
        if self.alloc.rate == self.current_rate:
            return False
        self.settle(now)
        self.current_rate = self.alloc.rate
        remaining = self.size_mb - self.bytes_sent
        self.completion_time = now + remaining / self.current_rate
        self.generation += 1
        return True


@dataclass
class SimResult:
    """Everything a finished run leaves behind."""

    config: SimConfig
    counters: Counters
    metrics: MetricsBundle
    ledgers: list[LinkLedger]
    tour_reports: list[AgentTourReport] = field(repr=False, default_factory=list)
    world: World | None = field(repr=False, default=None)
    catalog: Catalog | None = field(repr=False, default=None)
    arrival_digest: str = ""


class Simulation:
    """One configured run.  Build it, call run(), read the result."""

    def __init__(self, config: SimConfig, catalog: Catalog | None = None):
        config.validate()
        self.config = config
        root = random.Random(config.seed)
        catalog_rng = random.Random(root.getrandbits(64))
        placement_rng = random.Random(root.getrandbits(64))
        self.workload_rng = random.Random(root.getrandbits(64))
        self.catalog = catalog or build_catalog(
            config.num_videos, config.total_arrival_rate, config.tier_mix,
            config.video_size_min, config.video_size_max, catalog_rng,
        )
        self.world = build_world(
            config.num_proxies, config.num_videos, config.cache_capacity,
            config.link_capacity,
        )
        seed_initial_placement(self.world, self.catalog, placement_rng)
        self.now = 0.0
        self.heap: list[tuple[float, int, int, object]] = []
        self.seq = itertools.count()
        self.streams: dict[int, StreamProgress] = {}
        self.counters = Counters()
        self.metrics = MetricsBundle()
        self.tour_reports: list[AgentTourReport] = []
        self.arrival_hash = hashlib.sha256()

    def _push(self, time: float, kind: int, payload: object = None) -> None:
        heapq.heappush(self.heap, (time, next(self.seq), kind, payload))

    def _schedule_arrival(self) -> None:
        dt, proxy_id, video_id, user_class = generate_arrival(self.workload_rng, self.config)
        self._push(self.now + dt, EV_ARRIVAL, (proxy_id, video_id, user_class))

    def _push_completion(self, stream: StreamProgress) -> None:
        self._push(stream.completion_time, EV_COMPLETION,
                   (stream.alloc.alloc_id, stream.generation))

    def run(self) -> SimResult:
        config = self.config
        self._schedule_arrival()
        self._push(config.agent_period, EV_TOUR)
        self._push(config.sample_period, EV_SAMPLE)
        horizon = config.horizon
        while self.heap:
            time, _, kind, payload = heapq.heappop(self.heap)
            if time > horizon:
                break
            self.now = time
            if kind == EV_ARRIVAL:
                self._on_arrival(payload)
            elif kind == EV_COMPLETION:
                self._on_completion(payload)
            elif kind == EV_TOUR:
                self._on_tour()
            else:
                self._on_sample()
        self.now = horizon
        self._drain()
        ledgers = [LinkLedger.from_link(link) for link in self.world.all_links()]
        return SimResult(
            config=config,
            counters=self.counters,
            metrics=self.metrics,
            ledgers=ledgers,
            tour_reports=self.tour_reports,
            world=self.world,
            catalog=self.catalog,
            arrival_digest=self.arrival_hash.hexdigest(),
        )

    def _on_arrival(self, payload) -> None:
        proxy_id, video_id, user_class = payload
        counters = self.counters
        counters.requested += 1
        counters.requested_by_class[user_class] += 1
        self.arrival_hash.update(
            f"{self.now!r},{proxy_id},{video_id},{int(user_class)}\n".encode()
        )
        decision = handle_request(
            self.world, self.now, proxy_id, video_id, user_class,
            self.catalog, self.config.profits, self.config.psg_enabled,
        )
        if decision.source is RouteSource.LOCAL:
            counters.local_hits += 1
        elif decision.source is RouteSource.REJECTED:
            counters.rejected += 1
        else:
            stream = StreamProgress(
                decision.allocation, decision.link, proxy_id, decision.source,
                self.catalog.video(video_id).size_mb, self.now,
            )
            self.streams[stream.alloc.alloc_id] = stream
            if decision.plan is not None:
                for victim_id, _take in decision.plan.victims:
                    victim = self.streams[victim_id]
                    if victim.on_rate_change(self.now):
                        self._push_completion(victim)
            self._push_completion(stream)
        self._schedule_arrival()

    def _on_completion(self, payload) -> None:
        alloc_id, generation = payload
        stream = self.streams.get(alloc_id)
        if stream is None or stream.generation != generation:
            return
        del self.streams[alloc_id]
        stream.settle(self.now)
        stream.link.release(self.now, alloc_id)
        self.world.proxies[stream.proxy_id].stream_closed(self.now, stream.video_id)
        counters = self.counters
        if stream.source is RouteSource.LPS:
            counters.served_lps += 1
        elif stream.source is RouteSource.RPS:
            counters.served_rps += 1
        else:
            counters.served_cms += 1
        counters.bytes_completed += stream.bytes_sent
        rel_error = abs(stream.bytes_sent - stream.size_mb) / stream.size_mb
        if rel_error > counters.max_byte_rel_error:
            counters.max_byte_rel_error = rel_error

    def _on_tour(self) -> None:
        report = agent_tour(self.now, self.world, self.catalog, self.config.profits)
        self.tour_reports.append(report)
        self._push(schedule_next_tour(self.now, self.config.agent_period), EV_TOUR)

    def _on_sample(self) -> None:
        self.metrics.take_snapshot(self.now, self.world.all_links())
        for link in self.world.all_links():
            link.check_conservation()
        self._push(self.now + self.config.sample_period, EV_SAMPLE)

    def _drain(self) -> None:
        """Close out streams still live at the horizon."""
        counters = self.counters
        for alloc_id, stream in list(self.streams.items()):
            stream.settle(self.now)
            stream.link.release(self.now, alloc_id)
            self.world.proxies[stream.proxy_id].stream_closed(self.now, stream.video_id)
            counters.drained += 1
            counters.bytes_drained += stream.bytes_sent
        self.streams.clear()


def run(config: SimConfig, catalog: Catalog | None = None) -> SimResult:
    return Simulation(config, catalog).run()


def baseline_no_psg(config: SimConfig) -> SimResult:
    """Same seed and workload, but every cache miss goes to the central
    server."""
    return run(dataclasses.replace(config, psg_enabled=False))
