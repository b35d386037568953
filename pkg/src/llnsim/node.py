"""Shared per-node scaffolding: the routing set and the MAC/engine glue."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from .kernel import Simulator
from .messages import BROADCAST, RouteMsg, encoded_size
from .metrics import MAC_DROP, NO_ROUTE
from .radio import Frame, KIND_CONTROL, KIND_DATA, NodeMac

# link status as verified by the collection-tree handshake
HEARD = "heard"  # we received something from the neighbor
SYM = "sym"  # the neighbor confirmed it also hears us


@dataclass(slots=True)
class RoutingTuple:
    dest: int
    next_hop: int
    metric: int  # hop count toward dest
    seq: int  # freshness of the information that installed the tuple
    valid_until: int | None  # tick of expiry; None never expires
    status: str = SYM


class RoutingSet:
    """At most one tuple per destination; expired tuples vanish on access."""

    def __init__(self) -> None:
        self._routes: dict[int, RoutingTuple] = {}

    def get(self, dest: int) -> RoutingTuple | None:
        """Raw lookup; may return an expired tuple."""
        return self._routes.get(dest)

    def get_valid(self, dest: int, now: int) -> RoutingTuple | None:
        tup = self._routes.get(dest)
        if tup is None:
            return None
        if tup.valid_until is not None and tup.valid_until < now:
            del self._routes[dest]
            return None
        return tup

    def install(self, tup: RoutingTuple) -> None:
        self._routes[tup.dest] = tup

    def remove(self, dest: int) -> None:
        self._routes.pop(dest, None)

    def expire(self, now: int) -> list[int]:
        """Sweep out every tuple past its validity; returns removed dests."""
        gone = [dest for dest, tup in self._routes.items()
                if tup.valid_until is not None and tup.valid_until < now]
        for dest in gone:
            del self._routes[dest]
        return gone

    def invalidate_via(self, next_hop: int) -> list[int]:
        gone = [dest for dest, tup in self._routes.items()
                if tup.next_hop == next_hop]
        for dest in gone:
            del self._routes[dest]
        return gone

    def items(self):
        return self._routes.items()

    def __len__(self) -> int:
        return len(self._routes)

    def __contains__(self, dest: int) -> bool:
        return dest in self._routes


class NodeEngine:
    """Base class for one node's routing logic; subclasses implement a backend."""

    def __init__(self, net, addr: int) -> None:
        self.net = net
        self.sim: Simulator = net.sim
        self.addr = addr
        self.rng = self.sim.node_stream(addr)
        self.mac = NodeMac(self.sim, net.medium, addr, net.cfg.mac,
                           on_result=self._mac_result)
        self.dead = False
        self.counters: dict[str, int] = defaultdict(int)

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        """Called once at t=0 before any traffic."""

    def kill(self) -> None:
        self.dead = True
        self.mac.dead = True

    # -- radio glue --------------------------------------------------------

    def receive(self, frame: Frame, prev_hop: int) -> None:
        if self.dead:
            return
        if frame.dst != BROADCAST and frame.dst != self.addr:
            return  # overheard someone else's unicast
        if frame.kind == KIND_CONTROL:
            self.handle_msg(frame.msg, prev_hop)
        else:
            self.handle_data(frame, prev_hop)

    def _mac_result(self, frame: Frame, delivered: bool) -> None:
        if self.dead:
            return
        if delivered:
            self.on_link_ok(frame)
            return
        if frame.kind == KIND_DATA:
            self.net.metrics.dropped(frame.packet, MAC_DROP)
            self.on_broken_link(frame)
        else:
            self.counters[f"lost_{frame.label}"] += 1
            self.on_control_lost(frame)

    def on_link_ok(self, frame: Frame) -> None:
        """A unicast frame toward frame.dst was acknowledged."""

    def on_broken_link(self, frame: Frame) -> None:
        """A data frame exhausted its retries toward frame.dst."""

    def on_control_lost(self, frame: Frame) -> None:
        """A unicast control frame exhausted its retries toward frame.dst."""

    # -- send helpers ------------------------------------------------------

    def send_control(self, msg: RouteMsg, dst: int, label: str = "") -> None:
        frame = Frame(self.addr, dst, encoded_size(msg), KIND_CONTROL,
                      label or msg.kind.value, msg)
        self.mac.enqueue(frame)

    def send_data(self, pkt, next_hop: int, header_bytes: int = 0,
                  source_route: tuple[int, ...] = ()) -> None:
        if pkt.hops >= self.net.hop_limit:
            # routing transients can form short-lived loops; cut them here
            self.counters["hop_limit_drop"] += 1
            self.net.metrics.dropped(pkt, NO_ROUTE)
            return
        pkt.hops += 1
        frame = Frame(self.addr, next_hop, pkt.payload_bytes + header_bytes,
                      KIND_DATA, "data", None, pkt, source_route)
        if not self.mac.enqueue(frame):
            self.net.metrics.dropped(pkt, MAC_DROP)

    def deliver_local(self, pkt) -> None:
        self.net.app_delivered(pkt, self.addr)

    # -- backend hooks -----------------------------------------------------

    def handle_app_send(self, pkt) -> None:
        raise NotImplementedError

    def handle_msg(self, msg: RouteMsg, prev_hop: int) -> None:
        raise NotImplementedError

    def handle_data(self, frame: Frame, prev_hop: int) -> None:
        raise NotImplementedError
