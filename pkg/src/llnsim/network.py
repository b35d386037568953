"""Run assembly: builds one network from a configuration and executes it.

A run is a pure function of (configuration, seed): topology placement,
traffic timing, and every protocol decision draw from named substreams of
the one seeded generator, so identical inputs give identical outputs down
to the byte.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .ctp import CtpNode
from .kernel import SimulationError, Simulator, to_ticks
from .loadng import LoadngNode
from .metrics import (DELIVERED, DOWN, UP, BUFFER_OVERFLOW, DISCOVERY_TIMEOUT,
                      IN_FLIGHT, MAC_DROP, NO_ROUTE, MetricsCollector,
                      MetricsReport, avg_delay, overhead_rate, pdr)
from .radio import Medium
from .rpl import RplNode
from .scenario import (CONCENTRATOR, AppSend, ScenarioConfig,
                       build_traffic_schedule, generate_topology)


@dataclass(frozen=True)
class RunResult:
    """Everything one run produced; report is the CSV-facing summary."""

    cfg: ScenarioConfig
    report: MetricsReport
    metrics: MetricsCollector
    trace: list
    nodes: dict
    positions: dict


class Network:
    def __init__(self, cfg: ScenarioConfig,
                 positions: dict[int, object] | None = None) -> None:
        """Explicit positions override the generated layout; addresses must
        be 0..node_count-1 with 0 as the concentrator."""
        cfg.validate()
        self.cfg = cfg
        self.sim = Simulator(cfg.seed)
        self.metrics = MetricsCollector(to_ticks(cfg.warmup))
        self.trace: list[tuple] = []  # protocol milestones, for tests
        self.end_ticks = to_ticks(cfg.duration)
        # generous bound; legitimate paths are far shorter than two laps
        self.hop_limit = 2 * cfg.node_count
        if positions is None:
            self.positions = generate_topology(cfg, self.sim.stream("topo"))
        else:
            if sorted(positions) != list(range(cfg.node_count)):
                raise SimulationError("positions must cover 0..node_count-1")
            self.positions = dict(positions)
        self.medium = Medium(self.sim, cfg.radio,
                             on_control_tx=self.metrics.control_tx)
        self.nodes: dict[int, object] = {}
        for addr in sorted(self.positions):
            engine = self._make_engine(addr)
            self.nodes[addr] = engine
            self.medium.add_node(addr, self.positions[addr], engine.receive)
        self.medium.finalize()
        self.schedule = build_traffic_schedule(cfg, self.sim.stream("traffic"))

    def _make_engine(self, addr: int):
        backend = self.cfg.backend
        if backend == "loadng":
            return LoadngNode(self, addr)
        if backend == "loadng-ctp":
            return CtpNode(self, addr, CONCENTRATOR)
        return RplNode(self, addr, CONCENTRATOR)

    # -- execution -----------------------------------------------------------

    def run(self) -> RunResult:
        for addr in sorted(self.nodes):
            self.nodes[addr].start()
        for send in self.schedule:
            self.sim.schedule_at(send.at, lambda s=send: self.app_send(s))
        for time_s, addr in self.cfg.removals:
            self.sim.schedule_at(to_ticks(time_s),
                                 lambda a=addr: self.remove_node(a))
        self.sim.run_until(self.end_ticks)
        self.metrics.close(self.end_ticks)
        self.metrics.assert_conserved()
        for addr, engine in self.nodes.items():
            if not engine.mac.conserved():
                raise SimulationError(f"MAC conservation violated at node {addr}")
        return RunResult(self.cfg, self._report(), self.metrics, self.trace,
                         self.nodes, self.positions)

    # -- application layer -----------------------------------------------------

    def app_send(self, send: AppSend) -> None:
        pkt = self.metrics.new_packet(send.src, send.dst, send.payload_bytes,
                                      send.direction, send.kind, self.sim.now)
        engine = self.nodes[send.src]
        if engine.dead:
            self.metrics.dropped(pkt, NO_ROUTE)
            return
        engine.handle_app_send(pkt)

    def app_delivered(self, pkt, at_addr: int) -> None:
        self.metrics.delivered(pkt, self.sim.now)
        if not self.cfg.traffic_enabled:
            return
        traffic = self.cfg.traffic
        if pkt.kind == "report" and at_addr == CONCENTRATOR:
            # acking only reports keeps the ack exchange from echoing forever
            ack = self.metrics.new_packet(at_addr, pkt.src,
                                          traffic.downward_ack_bytes,
                                          DOWN, "ack", self.sim.now)
            self.nodes[at_addr].handle_app_send(ack)
        elif pkt.direction == DOWN and at_addr != CONCENTRATOR:
            ack = self.metrics.new_packet(at_addr, pkt.src,
                                          traffic.upward_ack_bytes,
                                          UP, "ack", self.sim.now)
            self.nodes[at_addr].handle_app_send(ack)

    def remove_node(self, addr: int) -> None:
        self.nodes[addr].kill()
        self.medium.remove_node(addr)

    # -- reporting -------------------------------------------------------------

    def _report(self) -> MetricsReport:
        m = self.metrics
        w = m.warmup_ticks
        post = [p for p in m.records if p.created_at >= w]
        fates = Counter(p.fate for p in post)
        up = [p for p in post if p.direction == UP]
        down = [p for p in post if p.direction == DOWN]
        cfg = self.cfg
        distance = (cfg.concentrator_distance
                    if cfg.topology == "distance-line" else None)
        return MetricsReport(
            cfg_id=cfg.cfg_id(),
            backend=cfg.backend,
            node_count=cfg.node_count,
            distance=distance,
            seed=cfg.seed,
            pdr_up=pdr(m.records, UP, w),
            pdr_down=pdr(m.records, DOWN, w),
            delay_up_s=avg_delay(m.records, UP, w),
            delay_down_s=avg_delay(m.records, DOWN, w),
            overhead_bps=overhead_rate(m.control_log, w, self.end_ticks),
            up_created=len(up),
            up_delivered=sum(1 for p in up if p.fate == DELIVERED),
            down_created=len(down),
            down_delivered=sum(1 for p in down if p.fate == DELIVERED),
            mac_drop=fates.get(MAC_DROP, 0),
            no_route=fates.get(NO_ROUTE, 0),
            discovery_timeout=fates.get(DISCOVERY_TIMEOUT, 0),
            buffer_overflow=fates.get(BUFFER_OVERFLOW, 0),
            in_flight=fates.get(IN_FLIGHT, 0),
        )


def run_scenario(cfg: ScenarioConfig) -> RunResult:
    """Build and execute one run."""
    return Network(cfg).run()
