"""Proxy ring topology, request routing and proxy cache management.

Proxies sit on a ring; each proxy owns three inbound links it serves
streams over: from its left neighbor, from its right neighbor, and from
the central server.  A request lands at a proxy and is served locally when
the video is cached there; otherwise the router looks at which neighbors
hold the video and picks a source, preferring whichever neighbor link has
more free bandwidth and falling back to the central server.

Caches are LRU over request timestamps, but a video with a live inbound
stream is never evicted; when everything cached is live the cache may
temporarily exceed its capacity and is reconciled as streams complete.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from enum import Enum

from .allocation import AdmissionOutcome, Link, LinkKind, ReclaimPlan
from .model import Catalog, DemandProfile, Tier, TIERS, UserClass, WeightProfile


class RouteSource(Enum):
    """Where a request ends up being served from."""

    LOCAL = "local"
    LPS = "lps"
    RPS = "rps"
    CMS = "cms"
    REJECTED = "rejected"


class Presence(Enum):
    """Which of the two ring neighbors hold the requested video."""

    LPS_ONLY = "lps_only"
    RPS_ONLY = "rps_only"
    BOTH = "both"
    NEITHER = "neither"


@dataclass
class RouteDecision:
    """Outcome of one request at one proxy."""

    source: RouteSource
    allocation: object = None
    link: Link | None = None
    plan: ReclaimPlan | None = None
    at_max: bool = False


class ProxyServer:
    """One ring node: an LRU cache plus three inbound links it streams over."""

    def __init__(self, proxy_id: int, cache_capacity: int, link_capacity: int,
                 num_videos: int, id_source=None):
        self.proxy_id = proxy_id
        self.cache_capacity = cache_capacity
        self.cache: dict[int, float] = {}
        self.live_videos: dict[int, int] = {}
        self.local_counts = DemandProfile(num_videos)
        self.global_weights = WeightProfile.zeros(num_videos)
        label = f"p{proxy_id}"
        self.links: dict[LinkKind, Link] = {
            kind: Link(kind, link_capacity, f"{label}-{kind.value}", id_source)
            for kind in LinkKind
        }

    def has(self, video_id: int) -> bool:
        return video_id in self.cache

    def touch(self, time: float, video_id: int) -> None:
        if video_id not in self.cache:
            raise ValueError(f"proxy {self.proxy_id} does not hold video {video_id}")
        self.cache[video_id] = time

    def weight_of(self, video_id: int, user_class: UserClass, profits) -> int:
        """Demand weight as this proxy sees it right now.

        The agent's last global table can lag local traffic, so take the
        larger of the global weight and the locally counted one.
        """
        local = self.local_counts.count(video_id, user_class) * profits[user_class - 1]
        return max(self.global_weights.weight(video_id, user_class), local)

    def stream_opened(self, video_id: int) -> None:
        self.live_videos[video_id] = self.live_videos.get(video_id, 0) + 1

    def stream_closed(self, time: float, video_id: int) -> None:
        left = self.live_videos.get(video_id, 0) - 1
        if left < 0:
            raise ValueError(f"proxy {self.proxy_id}: no live stream for video {video_id}")
        if left:
            self.live_videos[video_id] = left
        else:
            self.live_videos.pop(video_id, None)
        self.reconcile_cache(time)

    def _idle_lru(self) -> int | None:
        """Least recently used cached video with no live inbound stream."""
        best = None
        for video_id, ts in self.cache.items():
            if video_id in self.live_videos:
                continue
            if best is None or (ts, video_id) < best:
                best = (ts, video_id)
        return None if best is None else best[1]

    def insert(self, time: float, video_id: int) -> None:
        """Cache a video, evicting at most one idle entry to make room.

        When every cached video is live the cache is allowed to run over
        capacity; reconcile_cache() trims it back once streams finish.
        """
        if video_id in self.cache:
            self.cache[video_id] = time
            return
        if len(self.cache) >= self.cache_capacity:
            victim = self._idle_lru()
            if victim is not None:
                del self.cache[victim]
        self.cache[video_id] = time

    def reconcile_cache(self, time: float) -> None:
        del time
        while len(self.cache) > self.cache_capacity:
            victim = self._idle_lru()
            if victim is None:
                return
            del self.cache[victim]


class CentralServer:
    """Origin holding the full catalog; receives the agent's weight table."""

    def __init__(self, num_videos: int):
        self.num_videos = num_videos
        self.global_weights = WeightProfile.zeros(num_videos)

    def has(self, video_id: int) -> bool:
        return 0 <= video_id < self.num_videos


class World:
    """The ring plus the central server."""

    def __init__(self, proxies: list[ProxyServer], cms: CentralServer):
        self.proxies = proxies
        self.cms = cms

    @property
    def num_proxies(self) -> int:
        return len(self.proxies)

    def lps_of(self, proxy_id: int) -> ProxyServer:
        """Left ring neighbor of this proxy."""
        return self.proxies[(proxy_id - 1) % len(self.proxies)]

    def rps_of(self, proxy_id: int) -> ProxyServer:
        """Right ring neighbor of this proxy."""
        return self.proxies[(proxy_id + 1) % len(self.proxies)]

    def all_links(self) -> list[Link]:
        return [link for proxy in self.proxies for link in proxy.links.values()]


def build_world(num_proxies: int, num_videos: int, cache_capacity: int,
                link_capacity: int) -> World:
    id_source = itertools.count(1)
    proxies = [
        ProxyServer(pid, cache_capacity, link_capacity, num_videos, id_source)
        for pid in range(num_proxies)
    ]
    return World(proxies, CentralServer(num_videos))


def locate(world: World, proxy_id: int, video_id: int) -> Presence:
    """Check the two ring neighbors of a proxy for a video."""
    at_lps = world.lps_of(proxy_id).has(video_id)
    at_rps = world.rps_of(proxy_id).has(video_id)
    if at_lps and at_rps:
        return Presence.BOTH
    if at_lps:
        return Presence.LPS_ONLY
    if at_rps:
        return Presence.RPS_ONLY
    return Presence.NEITHER


def route_remote(
    world: World,
    time: float,
    proxy_id: int,
    video_id: int,
    user_class: UserClass,
    min_rate: int,
    max_rate: int,
    weight: int,
    psg_enabled: bool = True,
) -> RouteDecision:
    """Pick a source for a cache miss and try to admit the stream.

    With proxy sharing enabled, a neighbor holding the video is tried
    first; when both hold it the one whose link here has strictly more
    free bandwidth wins (ties go right).  If the chosen neighbor's link
    rejects, the central server is the only fallback.  Without sharing
    everything goes straight to the central server.
    """
    proxy = world.proxies[proxy_id]
    attempts: list[tuple[RouteSource, Link]] = []
    if psg_enabled:
        presence = locate(world, proxy_id, video_id)
        lps_link = proxy.links[LinkKind.PS_LPS]
        rps_link = proxy.links[LinkKind.PS_RPS]
        if presence is Presence.BOTH:
            if lps_link.free_bandwidth() > rps_link.free_bandwidth():
                attempts.append((RouteSource.LPS, lps_link))
            else:
                attempts.append((RouteSource.RPS, rps_link))
        elif presence is Presence.LPS_ONLY:
            attempts.append((RouteSource.LPS, lps_link))
        elif presence is Presence.RPS_ONLY:
            attempts.append((RouteSource.RPS, rps_link))
    attempts.append((RouteSource.CMS, proxy.links[LinkKind.PS_CMS]))
    for source, link in attempts:
        outcome: AdmissionOutcome | None = link.admit(
            time, video_id, user_class, min_rate, max_rate, weight
        )
        if outcome is not None:
            return RouteDecision(source, outcome.allocation, link, outcome.plan, outcome.at_max)
    return RouteDecision(RouteSource.REJECTED)


def handle_request(
    world: World,
    time: float,
    proxy_id: int,
    video_id: int,
    user_class: UserClass,
    catalog: Catalog,
    profits,
    psg_enabled: bool = True,
) -> RouteDecision:
    """Process one arrival end to end at its landing proxy.

    The request is counted first (weights must include it), then served
    from the local cache when present; otherwise it is routed remotely and
    on success the video is cached here and marked live while streaming in.
    """
    proxy = world.proxies[proxy_id]
    proxy.local_counts.record(video_id, user_class)
    if proxy.has(video_id):
        proxy.touch(time, video_id)
        return RouteDecision(RouteSource.LOCAL)
    video = catalog.video(video_id)
    weight = proxy.weight_of(video_id, user_class, profits)
    decision = route_remote(
        world, time, proxy_id, video_id, user_class,
        video.min_rate(user_class), video.max_rate(user_class), weight, psg_enabled,
    )
    if decision.source not in (RouteSource.REJECTED, RouteSource.LOCAL):
        proxy.insert(time, video_id)
        proxy.stream_opened(video_id)
    return decision


def seed_initial_placement(world: World, catalog: Catalog, rng: random.Random) -> None:
    """Deal videos across proxy caches before the run starts.

    Each proxy gets a quarter of its cache from each of the two popular
    tiers and the remainder from the least popular tier.  Tier lists are
    shuffled once and dealt round-robin so replicas spread as evenly as
    the counts allow.
    """
    quota = {
        Tier.MOST: world.proxies[0].cache_capacity // 4,
        Tier.SECONDARY: world.proxies[0].cache_capacity // 4,
    }
    quota[Tier.LEAST] = world.proxies[0].cache_capacity - sum(quota.values())
    for tier in TIERS:
        pool = catalog.tier_members[tier][:]
        rng.shuffle(pool)
        per_proxy = quota[tier]
        if per_proxy > len(pool):
            raise ValueError(f"cache quota {per_proxy} exceeds {tier.value} tier size {len(pool)}")
        idx = 0
        for proxy in world.proxies:
            placed = 0
            skipped = 0
            while placed < per_proxy:
                video_id = pool[idx % len(pool)]
                idx += 1
                if video_id in proxy.cache:
                    skipped += 1
                    if skipped > len(pool):
                        raise ValueError(
                            f"proxy {proxy.proxy_id} cannot fit {tier.value} quota"
                        )
                    continue
                proxy.cache[video_id] = 0.0
                placed += 1
                skipped = 0


def placement_dump(world: World) -> str:
    """One line per proxy: sorted cached video ids, space separated."""
    lines = []
    for proxy in world.proxies:
        ids = " ".join(str(v) for v in sorted(proxy.cache))
        lines.append(f"proxy {proxy.proxy_id}: {ids}")
    return "\n".join(lines) + "\n"


def push_weights(world: World, table: WeightProfile) -> None:
    """Install a freshly derived global weight table everywhere."""
    for proxy in world.proxies:
        proxy.global_weights = table
    world.cms.global_weights = table
