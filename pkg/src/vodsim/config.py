"""Run configuration: defaults, validation and a flat key=value file format."""

from __future__ import annotations

from dataclasses import dataclass, fields


class ConfigError(ValueError):
    """Bad or inconsistent run configuration."""


@dataclass
class SimConfig:
    num_proxies: int = 6
    num_videos: int = 480
    link_capacity: int = 300
    cache_capacity: int = 160
    video_size_min: int = 2400
    video_size_max: int = 4800
    total_arrival_rate: float = 1.0
    tier_mix: tuple[float, float, float] = (0.50, 0.35, 0.15)
    class_mix: tuple[float, float, float] = (0.20, 0.30, 0.50)
    profits: tuple[int, int, int] = (3, 2, 1)
    horizon: float = 10000.0
    agent_period: float = 100.0
    sample_period: float = 10.0
    seed: int = 1
    psg_enabled: bool = True
    agent_window: str = "cumulative"

    def validate(self) -> "SimConfig":
        if self.num_proxies < 3:
            raise ConfigError("need at least 3 proxies to form a ring")
        if self.num_videos <= 0 or self.num_videos % 4:
            raise ConfigError("num_videos must be a positive multiple of 4")
        if self.link_capacity <= 0:
            raise ConfigError("link_capacity must be positive")
        if self.cache_capacity <= 0 or self.cache_capacity > self.num_videos:
            raise ConfigError("cache_capacity must be in 1..num_videos")
        if self.cache_capacity % 4:
            raise ConfigError("cache_capacity must be a multiple of 4")
        if not 0 < self.video_size_min <= self.video_size_max:
            raise ConfigError("video size range must satisfy 0 < min <= max")
        if self.total_arrival_rate <= 0:
            raise ConfigError("total_arrival_rate must be positive")
        for name, mix in (("tier_mix", self.tier_mix), ("class_mix", self.class_mix)):
            if len(mix) != 3 or min(mix) <= 0 or abs(sum(mix) - 1.0) > 1e-9:
                raise ConfigError(f"{name} must be three positive shares summing to 1")
        if len(self.profits) != 3 or min(self.profits) <= 0:
            raise ConfigError("profits must be three positive integers")
        if not self.profits[0] >= self.profits[1] >= self.profits[2]:
            raise ConfigError("profits must be non-increasing by class")
        if self.horizon <= 0:
            raise ConfigError("horizon must be positive")
        if self.agent_period <= 0:
            raise ConfigError("agent_period must be positive")
        if self.sample_period <= 0:
            raise ConfigError("sample_period must be positive")
        if self.agent_window != "cumulative":
            raise ConfigError(f"unsupported agent_window {self.agent_window!r}")
        return self


def _parse_bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {raw!r}")


def _parse_value(name: str, kind: type, raw: str):
    try:
        if kind is bool:
            return _parse_bool(raw)
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is str:
            return raw
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc
    raise ConfigError(f"unhandled type for {name}")


def _parse_tuple(name: str, raw: str, item: type) -> tuple:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 3:
        raise ConfigError(f"{name} must have exactly 3 comma-separated values")
    return tuple(_parse_value(name, item, p) for p in parts)


_TUPLE_ITEM = {"tier_mix": float, "class_mix": float, "profits": int}


def load_config(path) -> SimConfig:
    """Read key=value lines; '#' starts a comment, blank lines are skipped."""
    values = {}
    known = {f.name: f.type for f in fields(SimConfig)}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, raw = line.partition("=")
            key, raw = key.strip(), raw.strip()
            if key not in known:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            if key in _TUPLE_ITEM:
                values[key] = _parse_tuple(key, raw, _TUPLE_ITEM[key])
            else:
                annotation = str(known[key])
                if "bool" in annotation:
                    values[key] = _parse_value(key, bool, raw)
                elif "int" in annotation:
                    values[key] = _parse_value(key, int, raw)
                elif "float" in annotation:
                    values[key] = _parse_value(key, float, raw)
                else:
                    values[key] = raw
    return SimConfig(**values).validate()
