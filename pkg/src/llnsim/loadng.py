"""Reactive hop-count routing: flooded route requests, unicast replies.

A source with no valid route buffers the packet and floods a RREQ; only the
destination answers, with a RREP that retraces the reverse path installed by
the flood and is acknowledged hop by hop.  Routes age out after a lifetime
unless refreshed by data, so slow periodic traffic pays a rediscovery per
packet burst.  Broken links invalidate routes and raise a RERR toward the
source of the packet that exposed them.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .kernel import draw_uniform, to_ticks
from .messages import BROADCAST, MsgKind, RouteMsg, next_seq, seq_newer
from .metrics import BUFFER_OVERFLOW, DISCOVERY_TIMEOUT, NO_ROUTE
from .node import HEARD, NodeEngine, RoutingSet, RoutingTuple, SYM
from .radio import Frame


@dataclass(slots=True)
class Discovery:
    """One in-progress route discovery with its waiting data packets."""

    seq: int
    packets: deque = field(default_factory=deque)


class LoadngNode(NodeEngine):
    # subclasses may pin routes open; reactive routes age out by default
    permanent_routes = False
    # subclasses may let transit hops repair a missing route in place
    transit_discovery = False

    def __init__(self, net, addr: int) -> None:
        super().__init__(net, addr)
        self.params = net.cfg.loadng
        self.routes = RoutingSet()
        self.seq = 0
        self.pending: dict[int, Discovery] = {}
        self.flood_seen: dict[tuple[int, int], int] = {}  # (orig, seq) -> best metric
        self.replied: dict[tuple[int, int], int] = {}  # best metric answered with a RREP
        self.reply_seq: dict[tuple[int, int], int] = {}
        self.lifetime_ticks = to_ticks(self.params.route_lifetime)
        self.ntt_ticks = to_ticks(self.params.net_traversal_time)

    # -- data plane ---------------------------------------------------------

    def handle_app_send(self, pkt) -> None:
        self._dispatch(pkt, at_source=True)

    def handle_data(self, frame: Frame, prev_hop: int) -> None:
        pkt = frame.packet
        if pkt.dst == self.addr:
            self.deliver_local(pkt)
        else:
            self._dispatch(pkt, at_source=False)

    def _dispatch(self, pkt, at_source: bool) -> None:
        # data rides only confirmed routes: a tuple learned from an overheard
        # flood proves the link one way, so it serves control replies but not
        # application traffic until a unicast exchange confirms it
        tup = self.routes.get_valid(pkt.dst, self.sim.now)
        if tup is not None and tup.status == SYM:
            self._forward_data(pkt, tup)
        elif at_source or self.transit_discovery:
            self._buffer_and_discover(pkt)
        else:
            # the route vanished under a packet already in flight; telling
            # the source is what lets it invalidate and rediscover
            self.counters["no_route_drop"] += 1
            self.net.metrics.dropped(pkt, NO_ROUTE)
            self._send_rerr(pkt.dst, pkt.src)

    def _forward_data(self, pkt, tup: RoutingTuple) -> None:
        if tup.valid_until is not None:
            tup.valid_until = self.sim.now + self.lifetime_ticks
        self.send_data(pkt, tup.next_hop)

    def _buffer_and_discover(self, pkt) -> None:
        disc = self.pending.get(pkt.dst)
        if disc is None:
            disc = Discovery(seq=self._originate_rreq(pkt.dst))
            disc.packets.append(pkt)
            self.pending[pkt.dst] = disc
        elif len(disc.packets) >= self.params.buffer_capacity:
            self.counters["buffer_overflow"] += 1
            self.net.metrics.dropped(pkt, BUFFER_OVERFLOW)
        else:
            disc.packets.append(pkt)

    # -- discovery ----------------------------------------------------------

    def _originate_rreq(self, dest: int) -> int:
        self.seq = next_seq(self.seq)
        seq = self.seq
        msg = RouteMsg(MsgKind.RREQ, originator=self.addr, destination=dest,
                       seq=seq)
        delay = to_ticks(draw_uniform(self.rng, 0.0, self.params.rreq_jitter_max))
        self.sim.schedule_in(delay, lambda: self._tx_broadcast(msg, "rreq"))
        self.sim.schedule_in(self.ntt_ticks,
                             lambda: self._discovery_timeout(dest, seq))
        self.counters["rreq_originated"] += 1
        return seq

    def _tx_broadcast(self, msg: RouteMsg, label: str) -> None:
        if self.dead:
            return
        self.send_control(msg, BROADCAST, label)

    def _discovery_timeout(self, dest: int, seq: int) -> None:
        disc = self.pending.get(dest)
        if disc is None or disc.seq != seq:
            return  # already resolved, or a newer attempt owns the entry
        del self.pending[dest]
        self.counters["discovery_timeout"] += 1
        for pkt in disc.packets:
            self.net.metrics.dropped(pkt, DISCOVERY_TIMEOUT)

    def _update_route(self, dest: int, next_hop: int, metric: int, seq: int,
                      status: str = SYM) -> bool:
        """Install when the information is fresher, or same-age but shorter."""
        if dest == self.addr:
            return False
        now = self.sim.now
        cur = self.routes.get(dest)
        expired = cur is not None and (cur.valid_until is not None
                                       and cur.valid_until < now)
        if (status == HEARD and cur is not None and not expired
                and cur.status == SYM):
            # an overheard flood neither degrades a confirmed route nor
            # extends its life; otherwise steady floods from a chatty
            # destination would keep every route to it eternally fresh
            return False
        if not (cur is None or expired or seq_newer(seq, cur.seq)
                or (seq == cur.seq and metric < cur.metric)):
            return False
        valid_until = None if self.permanent_routes else now + self.lifetime_ticks
        self.routes.install(RoutingTuple(dest, next_hop, metric, seq,
                                         valid_until, status))
        if status == SYM:
            self._route_available(dest)
        return True

    def _route_available(self, dest: int) -> None:
        disc = self.pending.pop(dest, None)
        if disc is None:
            return
        for pkt in disc.packets:
            self._dispatch(pkt, at_source=True)

    # -- control plane ------------------------------------------------------

    def handle_msg(self, msg: RouteMsg, prev_hop: int) -> None:
        kind = msg.kind
        if kind is MsgKind.RREQ:
            self._process_rreq(msg, prev_hop)
        elif kind is MsgKind.RREP:
            self._process_rrep(msg, prev_hop)
        elif kind is MsgKind.RREP_ACK:
            self.counters["rrep_ack_in"] += 1
        elif kind is MsgKind.RERR:
            self._process_rerr(msg, prev_hop)
        else:
            self.counters["ignored_msg"] += 1

    def _process_rreq(self, m: RouteMsg, prev_hop: int) -> None:
        if m.originator == self.addr:
            return  # own flood echoed back
        metric = m.hop_count + 1
        self._update_route(m.originator, prev_hop, metric, m.seq, status=HEARD)
        if m.destination == self.addr:
            key = (m.originator, m.seq)
            best = self.replied.get(key)
            if best is None or metric < best:
                self.replied[key] = metric
                self._generate_rrep(m)
            return
        key = (m.originator, m.seq)
        best = self.flood_seen.get(key)
        if best is not None and metric >= best:
            return  # duplicate with no better path
        self.flood_seen[key] = metric
        fwd = m.forwarded()
        delay = to_ticks(draw_uniform(self.rng, 0.0, self.params.rreq_jitter_max))
        self.sim.schedule_in(delay, lambda: self._tx_broadcast(fwd, "rreq"))

    def _generate_rrep(self, req: RouteMsg) -> None:
        # improvements re-reply under the same seq so forwarders prefer the
        # shorter path via the same-seq-better-metric rule
        key = (req.originator, req.seq)
        rep_seq = self.reply_seq.get(key)
        if rep_seq is None:
            self.seq = next_seq(self.seq)
            rep_seq = self.seq
            self.reply_seq[key] = rep_seq
        msg = RouteMsg(MsgKind.RREP, originator=self.addr,
                       destination=req.originator, seq=rep_seq)
        self.counters["rrep_originated"] += 1
        self._forward_rrep(msg)

    def _forward_rrep(self, msg: RouteMsg) -> None:
        tup = self.routes.get_valid(msg.destination, self.sim.now)
        if tup is None:
            self.counters["rrep_no_route"] += 1
            return
        self.send_control(msg, tup.next_hop)

    def _process_rrep(self, m: RouteMsg, prev_hop: int) -> None:
        self._update_route(m.originator, prev_hop, m.hop_count + 1, m.seq)
        ack = RouteMsg(MsgKind.RREP_ACK, originator=self.addr,
                       destination=prev_hop)
        self.send_control(ack, prev_hop)
        if m.destination == self.addr:
            return  # the install above released any buffered packets
        self._forward_rrep(m.forwarded())

    def _process_rerr(self, m: RouteMsg, prev_hop: int) -> None:
        tup = self.routes.get(m.unreachable)
        if tup is not None and tup.next_hop == prev_hop:
            self.routes.remove(m.unreachable)
        if m.destination == self.addr:
            return
        tup = self.routes.get_valid(m.destination, self.sim.now)
        if tup is None:
            self.counters["rerr_no_route"] += 1
            return
        self.send_control(m.forwarded(), tup.next_hop)

    # -- failure handling ---------------------------------------------------

    def _send_rerr(self, unreachable: int, toward: int) -> None:
        if toward == self.addr:
            return
        tup = self.routes.get_valid(toward, self.sim.now)
        if tup is None:
            self.counters["rerr_no_route"] += 1
            return
        msg = RouteMsg(MsgKind.RERR, originator=self.addr, destination=toward,
                       unreachable=unreachable)
        self.send_control(msg, tup.next_hop)

    def on_broken_link(self, frame: Frame) -> None:
        pkt = frame.packet
        invalidated = self.routes.invalidate_via(frame.dst)
        self.counters["link_breaks"] += 1
        if invalidated and pkt.src != self.addr:
            self._send_rerr(pkt.dst, pkt.src)
