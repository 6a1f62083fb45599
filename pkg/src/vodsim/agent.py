"""Roving profile agent: collects demand, rebuilds weights, re-tiers videos.

On each tour the agent visits every proxy, sums their cumulative request
counters cell by cell, derives the integer weight table from the merged
profile and pushes it to every proxy and the central server.  It also
re-ranks videos by total demand and rewrites the catalog's tier buckets,
which steers future tier-based placement decisions.
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import ConfigError
from .model import Catalog, DemandProfile, Tier, TIERS, WeightProfile, retier_by_rank
from .topology import World, push_weights


@dataclass
class AgentTourReport:
    """What one tour saw and changed."""

    time: float
    total_requests: int
    tier_changes: int
    merged: DemandProfile
    weights: WeightProfile

    def audit_row(self) -> str:
        return f"{self.time:.6f},{self.total_requests},{self.tier_changes}"


def merge_profiles(world: World, num_videos: int) -> DemandProfile:
    """Cell-wise sum of every proxy's cumulative counters."""
    merged = DemandProfile(num_videos)
    for proxy in world.proxies:
        merged.accumulate(proxy.local_counts)
    return merged


def agent_tour(time: float, world: World, catalog: Catalog, profits) -> AgentTourReport:
    """Run one full tour: merge, re-weight, push, re-tier."""
    merged = merge_profiles(world, catalog.nov)
    weights = WeightProfile.derive(merged, profits)
    push_weights(world, weights)
    new_tiers = retier_by_rank(merged, catalog.nov)
    changes = 0
    for video in catalog.videos:
        tier = new_tiers[video.video_id]
        if tier is not video.tier:
            video.tier = tier
            changes += 1
    if changes:
        catalog.tier_members = {tier: [] for tier in TIERS}
        for video in catalog.videos:
            catalog.tier_members[video.tier].append(video.video_id)
    return AgentTourReport(time, merged.total, changes, merged, weights)


def schedule_next_tour(now: float, period: float) -> float:
    if period <= 0:
        raise ConfigError(f"agent period must be positive, got {period}")
    return now + period


def append_tour_log(reports: list[AgentTourReport]) -> str:
    """CSV audit trail of tours, one row per visit."""
    lines = ["time,total_requests,tier_changes"]
    lines.extend(report.audit_row() for report in reports)
    return "\n".join(lines) + "\n"


def tier_population(catalog: Catalog) -> dict[Tier, int]:
    return {tier: len(catalog.tier_members[tier]) for tier in TIERS}
