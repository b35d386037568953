"""Scenario configuration: parameter sets, topology layout, traffic schedule.

Every default below equals the baseline measurement campaign values, so an
empty scenario file reproduces the reference setup: 1000 m x 1000 m field,
250 m radio range, 512-byte meter reports every 60 s upward, per-arrival
acks plus 61-byte config pushes every 300 s downward.
"""
from __future__ import annotations

import configparser
import random
from collections import deque
from dataclasses import dataclass, field, fields, replace

from .kernel import draw_uniform, to_ticks
from .metrics import DOWN, UP, config_digest
from .radio import MacParams, Position, RadioParams, reception_probability

BACKENDS = ("loadng", "loadng-ctp", "rpl")
TOPOLOGIES = ("random-grid", "distance-line")

CONCENTRATOR = 0  # the collection point always has address 0

# relay spacing that keeps a line topology connected with margin at 250 m range
MAX_LINE_SPACING = 200.0

MAX_PLACEMENT_RESAMPLES = 1000


class ConfigError(ValueError):
    """Rejected configuration; the CLI maps this to exit code 2."""


@dataclass(frozen=True)
class LoadngParams:
    rreq_jitter_max: float = 0.5  # seconds of flood desync per hop
    route_lifetime: float = 15.0  # seconds a tuple stays valid without use
    net_traversal_time: float = 10.0  # discovery timeout, no retry
    buffer_capacity: int = 4  # data packets held per destination during discovery

    def validate(self) -> None:
        if self.rreq_jitter_max < 0:
            raise ValueError("rreq_jitter_max must be >= 0")
        if self.route_lifetime <= 0:
            raise ValueError("route_lifetime must be positive")
        if self.net_traversal_time <= 0:
            raise ValueError("net_traversal_time must be positive")
        if self.buffer_capacity < 1:
            raise ValueError("buffer_capacity must be >= 1")


@dataclass(frozen=True)
class CtpParams:
    net_traversal_time: float = 10.0  # build flood fires at exactly twice this
    rreq_max_jitter: float = 1.0
    hello_min_jitter: float = 3.0
    hello_max_jitter: float = 5.0
    rrep_required: bool = True  # build flood asks every node to report its path
    rebuild_interval: float = 0.0  # 0 disables periodic re-triggering

    def validate(self) -> None:
        if self.net_traversal_time <= 0:
            raise ValueError("net_traversal_time must be positive")
        if self.rreq_max_jitter <= 0:
            raise ValueError("rreq_max_jitter must be positive")
        if self.hello_min_jitter <= 2 * self.rreq_max_jitter:
            # HELLOs must fire after every trigger re-broadcast could have;
            # otherwise the neighbor lists miss late re-broadcasters
            raise ValueError(
                "hello_min_jitter must exceed twice rreq_max_jitter "
                f"({self.hello_min_jitter} <= 2 * {self.rreq_max_jitter})")
        if self.hello_max_jitter < self.hello_min_jitter:
            raise ValueError("hello_max_jitter must be >= hello_min_jitter")
        if self.rebuild_interval < 0:
            raise ValueError("rebuild_interval must be >= 0")


@dataclass(frozen=True)
class RplParams:
    dio_interval_min: float = 2.0  # trickle Imin, seconds
    dio_interval_doublings: int = 20
    dio_redundancy_constant: int = 1
    dao_interval: float = 15.0
    dis_interval: float = 5.0  # unjoined nodes solicit this often
    buffer_capacity: int = 4  # upward packets held until the node joins

    def validate(self) -> None:
        if self.dio_interval_min <= 0:
            raise ValueError("dio_interval_min must be positive")
        if self.dio_interval_doublings < 0:
            raise ValueError("dio_interval_doublings must be >= 0")
        if self.dio_redundancy_constant < 1:
            raise ValueError("dio_redundancy_constant must be >= 1")
        if self.dao_interval <= 0:
            raise ValueError("dao_interval must be positive")
        if self.dis_interval <= 0:
            raise ValueError("dis_interval must be positive")
        if self.buffer_capacity < 1:
            raise ValueError("buffer_capacity must be >= 1")


@dataclass(frozen=True)
class TrafficProfile:
    report_bytes: int = 512
    report_period: float = 60.0
    upward_ack_bytes: int = 16  # client ack per received downward frame
    downward_ack_bytes: int = 12  # concentrator ack per received report
    config_bytes: int = 61
    config_period: float = 300.0

    def validate(self) -> None:
        for name in ("report_bytes", "upward_ack_bytes", "downward_ack_bytes",
                     "config_bytes"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.report_period <= 0:
            raise ValueError("report_period must be positive")
        if self.config_period <= 0:
            raise ValueError("config_period must be positive")


@dataclass(frozen=True)
class ScenarioConfig:
    backend: str = "loadng"
    node_count: int = 20
    topology: str = "random-grid"
    grid_side: float = 1000.0
    concentrator_distance: float = 250.0  # used by distance-line layouts
    duration: float = 28800.0  # seconds; baseline campaign length
    warmup: float = 120.0  # metrics ignore packets created before this
    seed: int = 1
    traffic_enabled: bool = True
    removals: tuple[tuple[float, int], ...] = ()  # scripted (time_s, addr) failures
    radio: RadioParams = field(default_factory=RadioParams)
    mac: MacParams = field(default_factory=MacParams)
    loadng: LoadngParams = field(default_factory=LoadngParams)
    ctp: CtpParams = field(default_factory=CtpParams)
    rpl: RplParams = field(default_factory=RplParams)
    traffic: TrafficProfile = field(default_factory=TrafficProfile)

    def validate(self) -> None:
        try:
            if self.backend not in BACKENDS:
                raise ValueError(f"unknown backend {self.backend!r}; "
                                 f"expected one of {BACKENDS}")
            if self.topology not in TOPOLOGIES:
                raise ValueError(f"unknown topology {self.topology!r}; "
                                 f"expected one of {TOPOLOGIES}")
            if self.node_count < 2:
                raise ValueError("node_count must be >= 2")
            if self.grid_side <= 0:
                raise ValueError("grid_side must be positive")
            if self.duration <= 0:
                raise ValueError("duration must be positive")
            if not 0 <= self.warmup < self.duration:
                raise ValueError("warmup must satisfy 0 <= warmup < duration")
            if self.topology == "distance-line":
                if self.concentrator_distance <= 0:
                    raise ValueError("concentrator_distance must be positive")
                if self.concentrator_distance > self.grid_side:
                    raise ValueError("concentrator_distance exceeds the field side")
                spacing = self.concentrator_distance / (self.node_count - 1)
                if spacing > MAX_LINE_SPACING:
                    raise ValueError(
                        f"line spacing {spacing:.0f} m exceeds {MAX_LINE_SPACING:.0f} m; "
                        "raise node_count to keep the line connected")
            for time_s, addr in self.removals:
                if time_s < 0 or not 0 < addr < self.node_count:
                    raise ValueError(f"bad removal entry ({time_s}, {addr})")
            self.radio.validate()
            self.mac.validate()
            self.loadng.validate()
            self.ctp.validate()
            self.rpl.validate()
            self.traffic.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def cfg_id(self) -> str:
        """Digest over everything except the seed, so repeat runs group together."""
        parts = []
        for f in fields(self):
            if f.name == "seed":
                continue
            parts.append(f"{f.name}={getattr(self, f.name)!r}")
        return config_digest(";".join(parts))


def generate_topology(cfg: ScenarioConfig, rng: random.Random) -> dict[int, Position]:
    """Node placements for one run; the concentrator is always address 0."""
    if cfg.topology == "distance-line":
        return _line_topology(cfg)
    return _grid_topology(cfg, rng)


def _line_topology(cfg: ScenarioConfig) -> dict[int, Position]:
    span = cfg.concentrator_distance
    spacing = span / (cfg.node_count - 1)
    x0 = (cfg.grid_side - span) / 2
    y = cfg.grid_side / 2
    positions = {CONCENTRATOR: Position(x0, y)}
    for i in range(1, cfg.node_count):
        positions[i] = Position(x0 + i * spacing, y)
    return positions


def _grid_topology(cfg: ScenarioConfig, rng: random.Random) -> dict[int, Position]:
    side = cfg.grid_side
    positions = {CONCENTRATOR: Position(side / 2, side / 2)}
    for i in range(1, cfg.node_count):
        positions[i] = Position(rng.uniform(0, side), rng.uniform(0, side))
    resamples = 0
    while True:
        reachable = _reachable(positions, cfg.radio)
        stranded = [a for a in positions
                    if a != CONCENTRATOR and a not in reachable]
        if not stranded:
            return positions
        resamples += len(stranded)
        if resamples > MAX_PLACEMENT_RESAMPLES:
            raise ConfigError(
                f"could not place {cfg.node_count} connected nodes within "
                f"{MAX_PLACEMENT_RESAMPLES} resamples; widen the radio range "
                "or raise node_count")
        for addr in stranded:
            positions[addr] = Position(rng.uniform(0, side), rng.uniform(0, side))


def _reachable(positions: dict[int, Position], radio: RadioParams) -> set[int]:
    """Addresses with a multi-hop path to the concentrator."""
    addrs = list(positions)
    seen = {CONCENTRATOR}
    frontier = deque([CONCENTRATOR])
    while frontier:
        cur = frontier.popleft()
        pos = positions[cur]
        for other in addrs:
            if other in seen:
                continue
            if reception_probability(pos.distance_to(positions[other]), radio) > 0:
                seen.add(other)
                frontier.append(other)
    return seen


@dataclass(frozen=True, slots=True)
class AppSend:
    """One scheduled application transmission."""

    at: int  # ticks
    src: int
    dst: int
    payload_bytes: int
    direction: str
    kind: str


def build_traffic_schedule(cfg: ScenarioConfig,
                           rng: random.Random) -> list[AppSend]:
    """Periodic sends for the whole run; a pure function of (cfg, seed).

    Only the periodic reports and config pushes appear here; the per-arrival
    acks are reactive and are generated when deliveries happen.
    """
    if not cfg.traffic_enabled:
        return []
    sends: list[AppSend] = []
    traffic = cfg.traffic
    for client in range(1, cfg.node_count):
        t = draw_uniform(rng, 0.0, traffic.report_period)
        while t < cfg.duration:
            sends.append(AppSend(to_ticks(t), client, CONCENTRATOR,
                                 traffic.report_bytes, UP, "report"))
            t += traffic.report_period
    for client in range(1, cfg.node_count):
        t = draw_uniform(rng, 0.0, traffic.config_period)
        while t < cfg.duration:
            sends.append(AppSend(to_ticks(t), CONCENTRATOR, client,
                                 traffic.config_bytes, DOWN, "config"))
            t += traffic.config_period
    sends.sort(key=lambda s: (s.at, s.src, s.dst))
    return sends


# ---------------------------------------------------------------------------
# scenario file loading: flat INI sections, every key optional


_SECTION_TYPES = {
    "radio": ("radio", RadioParams),
    "mac": ("mac", MacParams),
    "loadng": ("loadng", LoadngParams),
    "ctp": ("ctp", CtpParams),
    "rpl": ("rpl", RplParams),
    "traffic": ("traffic", TrafficProfile),
}

_SCENARIO_KEYS = ("backend", "node_count", "topology", "grid_side",
                  "concentrator_distance", "duration", "warmup", "seed",
                  "traffic_enabled", "removals")


def _coerce(parser: configparser.ConfigParser, section: str, key: str, default):
    try:
        if isinstance(default, bool):
            return parser.getboolean(section, key)
        if isinstance(default, int):
            return parser.getint(section, key)
        if isinstance(default, float):
            return parser.getfloat(section, key)
        return parser.get(section, key)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from None


def _load_params(parser: configparser.ConfigParser, section: str, cls):
    instance = cls()
    if not parser.has_section(section):
        return instance
    updates = {}
    known = {f.name for f in fields(cls)}
    for key in parser.options(section):
        if key not in known:
            raise ConfigError(f"unknown key {key!r} in section [{section}]")
        updates[key] = _coerce(parser, section, key, getattr(instance, key))
    return replace(instance, **updates)


def _parse_removals(text: str) -> tuple[tuple[float, int], ...]:
    entries = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            time_s, addr = part.split(":")
            entries.append((float(time_s), int(addr)))
        except ValueError:
            raise ConfigError(
                f"bad removals entry {part!r}; expected time:addr") from None
    return tuple(entries)


def load_scenario(path: str) -> tuple[ScenarioConfig, dict]:
    """Parse a scenario file; returns (config, sweep-section key/values)."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed scenario file: {exc}") from None

    known_sections = set(_SECTION_TYPES) | {"scenario", "sweep"}
    for section in parser.sections():
        if section not in known_sections:
            raise ConfigError(f"unknown section [{section}]")

    cfg = ScenarioConfig()
    if parser.has_section("scenario"):
        updates = {}
        for key in parser.options("scenario"):
            if key not in _SCENARIO_KEYS:
                raise ConfigError(f"unknown key {key!r} in section [scenario]")
            if key == "removals":
                updates[key] = _parse_removals(parser.get("scenario", key))
            else:
                updates[key] = _coerce(parser, "scenario", key,
                                       getattr(cfg, key))
        cfg = replace(cfg, **updates)
    for section, (attr, cls) in _SECTION_TYPES.items():
        cfg = replace(cfg, **{attr: _load_params(parser, section, cls)})

    sweep = dict(parser.items("sweep")) if parser.has_section("sweep") else {}
    cfg.validate()
    return cfg, sweep
