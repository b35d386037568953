"""Collection-tree extension of the reactive engine.

The root floods a trigger RREQ so every router learns which neighbors it can
hear, each router answers with exactly one jittered HELLO listing those
neighbors, and links confirmed in both directions become symmetric.  At
exactly twice the traversal time after the trigger the root floods a build
RREQ that only crosses symmetric links, installing permanent upward routes;
when the build requests it, every router also unicasts one RREP to the root
so downward routes get installed along the way.  Steady-state traffic then
rides the tree with no further discovery; a router that missed the build
falls back to plain reactive discovery.
"""
from __future__ import annotations

from .kernel import draw_uniform, to_ticks
from .messages import BROADCAST, MsgKind, RouteMsg, next_seq
from .node import HEARD, SYM
from .loadng import LoadngNode


class CtpNode(LoadngNode):
    # tree routes do not age out; rebuilds, not timeouts, refresh them
    permanent_routes = True
    # a transit hop that loses its tree route repairs in place with a
    # reactive discovery instead of shedding every packet crossing it
    transit_discovery = True

    def __init__(self, net, addr: int, root_addr: int) -> None:
        super().__init__(net, addr)
        self.ctp = net.cfg.ctp
        self.root_addr = root_addr
        self.is_root = addr == root_addr
        self.neighbor_status: dict[int, str] = {}
        self.trigger_received = self.is_root
        self.build_done = self.is_root
        self.hello_scheduled = False
        self._rrep_done: set[int] = set()  # build seqs already answered

    def start(self) -> None:
        if self.is_root:
            self.sim.schedule_in(0, self._trigger_tree)

    # -- tree construction, root side ---------------------------------------

    def _trigger_tree(self) -> None:
        if self.dead:
            return
        self.seq = next_seq(self.seq)
        msg = RouteMsg(MsgKind.RREQ, originator=self.addr,
                       destination=self.addr, seq=self.seq, trigger=True)
        self.net.trace.append(("ctp_trigger", self.sim.now, self.addr))
        self.send_control(msg, BROADCAST, "rreq_trigger")
        self._schedule_hello()
        # the build flood is planned the moment the trigger goes out
        build_delay = 2 * to_ticks(self.ctp.net_traversal_time)
        self.sim.schedule_in(build_delay, self._send_build)
        if self.ctp.rebuild_interval > 0:
            self.sim.schedule_in(to_ticks(self.ctp.rebuild_interval),
                                 self._trigger_tree)

    def _send_build(self) -> None:
        if self.dead:
            return
        self.seq = next_seq(self.seq)
        msg = RouteMsg(MsgKind.RREQ, originator=self.addr,
                       destination=self.addr, seq=self.seq, build=True,
                       rrep_required=self.ctp.rrep_required)
        self.net.trace.append(("ctp_build", self.sim.now, self.addr))
        self.send_control(msg, BROADCAST, "rreq_build")

    # -- tree construction, router side --------------------------------------

    def handle_msg(self, msg: RouteMsg, prev_hop: int) -> None:
        if msg.kind is MsgKind.RREQ and msg.trigger:
            self._process_trigger(msg, prev_hop)
        elif msg.kind is MsgKind.RREQ and msg.build:
            self._process_build(msg, prev_hop)
        elif msg.kind is MsgKind.HELLO:
            self._process_hello(msg, prev_hop)
        else:
            super().handle_msg(msg, prev_hop)

    def _process_trigger(self, m: RouteMsg, prev_hop: int) -> None:
        # any trigger copy proves we hear that neighbor
        self.neighbor_status.setdefault(prev_hop, HEARD)
        if m.originator == self.addr:
            return
        key = (m.originator, m.seq)
        if key in self.flood_seen:
            return  # the trigger is re-broadcast once, improvements or not
        self.flood_seen[key] = m.hop_count + 1
        self.trigger_received = True
        fwd = m.forwarded()
        delay = to_ticks(draw_uniform(self.rng, 0.0, self.ctp.rreq_max_jitter))
        self.sim.schedule_in(delay,
                             lambda: self._tx_broadcast(fwd, "rreq_trigger"))
        self._schedule_hello()

    def _schedule_hello(self) -> None:
        if self.hello_scheduled:
            return
        self.hello_scheduled = True
        delay = to_ticks(draw_uniform(self.rng, self.ctp.hello_min_jitter,
                                      self.ctp.hello_max_jitter))
        self.sim.schedule_in(delay, self._send_hello)

    def _send_hello(self) -> None:
        if self.dead:
            return
        # list everything heard by emission time; late re-broadcasts made it in
        # because hello_min_jitter exceeds twice the trigger jitter
        neighbors = tuple(sorted(self.neighbor_status))
        msg = RouteMsg(MsgKind.HELLO, originator=self.addr,
                       destination=BROADCAST, hello_neighbors=neighbors)
        self.net.trace.append(("hello", self.sim.now, self.addr))
        self.send_control(msg, BROADCAST)

    def _process_hello(self, m: RouteMsg, prev_hop: int) -> None:
        if self.addr in m.hello_neighbors:
            self.neighbor_status[prev_hop] = SYM
        else:
            # the neighbor never heard us: leave (or record) one-way evidence
            self.neighbor_status.setdefault(prev_hop, HEARD)
        # HELLOs are strictly one-hop: never forwarded

    def _process_build(self, m: RouteMsg, prev_hop: int) -> None:
        self.neighbor_status.setdefault(prev_hop, HEARD)
        if m.originator == self.addr:
            return
        if not self.trigger_received:
            self.counters["build_without_trigger"] += 1
            return
        if self.neighbor_status.get(prev_hop) != SYM:
            self.counters["build_from_asym"] += 1
            return
        metric = m.hop_count + 1
        if not self._update_route(m.originator, prev_hop, metric, m.seq,
                                  status=SYM):
            return  # equal or worse than the tree we already have
        self.build_done = True
        fwd = m.forwarded()
        delay = to_ticks(draw_uniform(self.rng, 0.0, self.ctp.rreq_max_jitter))
        self.sim.schedule_in(delay,
                             lambda: self._tx_broadcast(fwd, "rreq_build"))
        if m.rrep_required and m.seq not in self._rrep_done:
            self._rrep_done.add(m.seq)
            rrep_delay = to_ticks(draw_uniform(self.rng, 0.0,
                                               self.ctp.rreq_max_jitter))
            self.sim.schedule_in(rrep_delay, self._send_tree_rrep)

    def _send_tree_rrep(self) -> None:
        """One RREP to the root per build, installing downward routes per hop."""
        if self.dead or not self.build_done:
            return
        self.seq = next_seq(self.seq)
        msg = RouteMsg(MsgKind.RREP, originator=self.addr,
                       destination=self.root_addr, seq=self.seq)
        self.net.trace.append(("ctp_rrep", self.sim.now, self.addr))
        self.counters["tree_rrep"] += 1
        self._forward_rrep(msg)

    # -- fallback accounting --------------------------------------------------

    def _originate_rreq(self, dest: int) -> int:
        # reaching here means the tree gave us no route
        self.counters["fallback_discovery"] += 1
        return super()._originate_rreq(dest)
