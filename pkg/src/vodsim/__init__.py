"""Deterministic simulator for class-aware bandwidth allocation in a
video-on-demand system built from a ring of proxy servers and a central
multimedia server."""

from .allocation import Allocation, Link, LinkKind, ReclaimPlan
from .config import ConfigError, SimConfig, load_config
from .metrics import Counters, MetricsBundle, emit_reports, time_avg_utilization
from .model import Catalog, DemandProfile, Tier, UserClass, VideoMeta, WeightProfile
from .sim import SimResult, Simulation, baseline_no_psg, generate_arrival, run
from .topology import ProxyServer, RouteDecision, RouteSource, World, build_world

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "Catalog",
    "ConfigError",
    "Counters",
    "DemandProfile",
    "Link",
    "LinkKind",
    "MetricsBundle",
    "ProxyServer",
    "ReclaimPlan",
    "RouteDecision",
    "RouteSource",
    "SimConfig",
    "SimResult",
    "Simulation",
    "Tier",
    "UserClass",
    "VideoMeta",
    "WeightProfile",
    "World",
    "baseline_no_psg",
    "build_world",
    "emit_reports",
    "generate_arrival",
    "load_config",
    "run",
    "time_avg_utilization",
    "__version__",
]
