"""Lossy-disc radio medium with collision detection, plus a CSMA link layer.

Reception probability falls off quadratically with distance inside the radio
range and is zero beyond it.  Two transmissions whose airtimes overlap at a
common in-range receiver destroy each other there (no capture).  Unicast
frames are retransmitted on missing link-layer acks; acks themselves are
idealized: never lost and free of airtime.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .kernel import SimulationError, Simulator, TICKS_PER_SECOND, draw_uniform, to_ticks
from .messages import BROADCAST

# every frame pays this many bytes of link header on the air
LINK_HEADER_BYTES = 16

KIND_CONTROL = "control"
KIND_DATA = "data"


@dataclass(frozen=True, slots=True)
class Position:
    x: float
    y: float

    def distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class RadioParams:
    range_m: float = 250.0
    p_edge: float = 0.8  # reception probability at exactly full range
    bitrate: int = 250_000  # bits per second

    def validate(self) -> None:
        if self.range_m <= 0:
            raise ValueError("radio range must be positive")
        if not 0.0 < self.p_edge <= 1.0:
            raise ValueError("p_edge must lie in (0, 1]")
        if self.bitrate <= 0:
            raise ValueError("bitrate must be positive")


@dataclass(frozen=True)
class MacParams:
    max_retries: int = 3
    backoff_unit: float = 0.00032  # seconds
    max_backoff_exponent: int = 5
    queue_capacity: int = 8

    def validate(self) -> None:
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.backoff_unit <= 0:
            raise ValueError("backoff_unit must be positive")
        if self.max_backoff_exponent < 0:
            raise ValueError("max_backoff_exponent must be >= 0")
        if self.queue_capacity < 1:
            raise ValueError("queue_capacity must be >= 1")


def reception_probability(distance: float, radio: RadioParams) -> float:
    """Chance a single frame crosses a link of the given length."""
    if distance < 0:
        raise ValueError("distance must be non-negative")
    if distance > radio.range_m:
        return 0.0
    ratio = distance / radio.range_m
    return 1.0 - (1.0 - radio.p_edge) * ratio * ratio


@dataclass(slots=True)
class Frame:
    """One link-layer transmission unit; a fresh Frame is built per hop."""

    src: int
    dst: int
    payload_bytes: int
    kind: str
    label: str = ""  # control subtype for the overhead log, e.g. "rreq_trigger"
    msg: object = None
    packet: object = None
    source_route: tuple[int, ...] = ()
    enqueue_time: int = 0


class _Reception:
    """Tracks one receiver's view of one in-flight frame."""

    __slots__ = ("collided",)

    def __init__(self, collided: bool) -> None:
        self.collided = collided


class Medium:
    """Shared radio channel: static positions, precomputed link probabilities.

    A transmission creates a reception record at every in-range neighbor so
    carrier sense and collisions work even for frames the neighbor will
    discard; loss draws are only spent on receivers that could accept the
    frame (the unicast target, or everyone for broadcast).
    """

    def __init__(self, sim: Simulator, radio: RadioParams,
                 on_control_tx=None) -> None:
        self.sim = sim
        self.radio = radio
        self.on_control_tx = on_control_tx
        self.positions: dict[int, Position] = {}
        self._receive_fns: dict[int, object] = {}
        # addr -> list of (nbr, prob, nbr_rng, nbr_receive_fn, nbr_ongoing_list)
        self._links: dict[int, list] = {}
        self._ongoing: dict[int, list] = {}
        self._transmitting: set[int] = set()
        self.tx_count = 0

    def add_node(self, addr: int, position: Position, receive_fn) -> None:
        if addr in self.positions:
            raise SimulationError(f"duplicate node address {addr}")
        self.positions[addr] = position
        self._receive_fns[addr] = receive_fn
        self._ongoing[addr] = []

    def finalize(self) -> None:
        """Build per-node link tables once all nodes are placed."""
        addrs = sorted(self.positions)
        for a in addrs:
            links = []
            for b in addrs:
                if b == a:
                    continue
                dist = self.positions[a].distance_to(self.positions[b])
                prob = reception_probability(dist, self.radio)
                if prob > 0.0:
                    links.append((b, prob, self.sim.node_stream(b),
                                  self._receive_fns[b], self._ongoing[b]))
            self._links[a] = links

    def remove_node(self, addr: int) -> None:
        """Scripted removal: the node stops hearing and being heard."""
        self.positions.pop(addr, None)
        self._receive_fns.pop(addr, None)
        self.finalize()
        self._links.pop(addr, None)

    def neighbors_of(self, addr: int) -> list[tuple[int, float]]:
        return [(entry[0], entry[1]) for entry in self._links[addr]]

    def airtime_ticks(self, payload_bytes: int) -> int:
        bits = (payload_bytes + LINK_HEADER_BYTES) * 8
        return (bits * TICKS_PER_SECOND) // self.radio.bitrate

    def busy_for(self, addr: int) -> bool:
        """Carrier sense: the node hears an ongoing frame or is on the air itself."""
        return bool(self._ongoing[addr]) or addr in self._transmitting

    def transmit(self, sender: int, frame: Frame, on_done) -> None:
        """Put a frame on the air; on_done(ok) fires when the airtime ends.

        ok reports whether the unicast destination decoded the frame
        (always True for broadcast).  The caller must keep the sender's
        radio idle: one frame in flight per node.
        """
        if sender in self._transmitting:
            raise SimulationError(f"node {sender} is already transmitting")
        self._transmitting.add(sender)
        self.tx_count += 1
        if self.on_control_tx is not None and frame.kind == KIND_CONTROL:
            self.on_control_tx(self.sim.now, frame.label, sender,
                               frame.payload_bytes + LINK_HEADER_BYTES)
        # a node cannot decode while it transmits
        for rec in self._ongoing[sender]:
            rec.collided = True
        transmitting = self._transmitting
        receptions = []
        for entry in self._links.get(sender, ()):
            lst = entry[4]
            busy = bool(lst)
            if busy:
                for rec in lst:
                    rec.collided = True
            rec = _Reception(busy or entry[0] in transmitting)
            lst.append(rec)
            receptions.append((entry, rec))
        airtime = self.airtime_ticks(frame.payload_bytes)
        self.sim.schedule_in(
            airtime, lambda: self._finish(sender, frame, receptions, on_done))

    def _finish(self, sender: int, frame: Frame, receptions, on_done) -> None:
        self._transmitting.discard(sender)
        dst = frame.dst
        broadcast = dst == BROADCAST
        ok = broadcast
        deliveries = []
        for entry, rec in receptions:
            entry[4].remove(rec)
            nbr = entry[0]
            if rec.collided or not (broadcast or nbr == dst):
                continue
            prob = entry[1]
            if prob >= 1.0 or entry[2].random() < prob:
                deliveries.append(entry)
                if nbr == dst:
                    ok = True
        # dispatch after the loss draws so handlers cannot perturb them
        for entry in deliveries:
            entry[3](frame, sender)
        if on_done is not None:
            on_done(ok)


class NodeMac:
    """Per-node CSMA queue: carrier sense, binary-exponential backoff, and
    acked retransmission for unicast frames.  Broadcast goes out once."""

    def __init__(self, sim: Simulator, medium: Medium, addr: int,
                 params: MacParams, on_result=None) -> None:
        self.sim = sim
        self.medium = medium
        self.addr = addr
        self.params = params
        self.rng = sim.node_stream(addr)
        self.on_result = on_result  # fn(frame, delivered: bool) after unicast resolution
        self.queue: deque[Frame] = deque()
        self.active = False
        self.dead = False
        self._attempt_no = 0
        self._retries = 0
        # conservation counters
        self.accepted = 0
        self.queue_drops = 0
        self.unicast_ok = 0
        self.unicast_fail = 0
        self.broadcast_done = 0
        self.transmissions = 0

    def enqueue(self, frame: Frame) -> bool:
        """Admit a frame to the send queue; False means it was dropped full."""
        if self.dead:
            return False
        if len(self.queue) >= self.params.queue_capacity:
            self.queue_drops += 1
            return False
        frame.enqueue_time = self.sim.now
        self.queue.append(frame)
        self.accepted += 1
        if not self.active:
            self.active = True
            self._attempt_no = 0
            self._retries = 0
            self.sim.schedule_in(0, self._attempt)
        return True

    def _backoff_ticks(self) -> int:
        exponent = min(self._attempt_no, self.params.max_backoff_exponent)
        window = self.params.backoff_unit * (1 << exponent)
        return to_ticks(draw_uniform(self.rng, 0.0, window))

    def _attempt(self) -> None:
        if self.dead or not self.queue:
            self.active = False
            return
        if self.medium.busy_for(self.addr):
            delay = self._backoff_ticks()
            self._attempt_no += 1
            self.sim.schedule_in(delay, self._attempt)
            return
        self.transmissions += 1
        self.medium.transmit(self.addr, self.queue[0], self._tx_done)

    def _tx_done(self, ok: bool) -> None:
        if self.dead:
            return
        frame = self.queue[0]
        if frame.dst == BROADCAST:
            self.queue.popleft()
            self.broadcast_done += 1
        elif ok:
            self.queue.popleft()
            self.unicast_ok += 1
            if self.on_result is not None:
                self.on_result(frame, True)
        elif self._retries < self.params.max_retries:
            # a missing ack usually means a collision that carrier sense
            # cannot prevent: two senders hidden from each other released
            # onto the same receiver.  Their frames outlast one backoff
            # window, so only retransmission waits that keep doubling give
            # the pair a chance to interleave instead of re-colliding
            self._retries += 1
            self._attempt_no += 1
            window = (self.params.backoff_unit
                      * (1 << (self.params.max_backoff_exponent + self._retries)))
            self.sim.schedule_in(to_ticks(draw_uniform(self.rng, 0.0, window)),
                                 self._attempt)
            return
        else:
            self.queue.popleft()
            self.unicast_fail += 1
            if self.on_result is not None:
                self.on_result(frame, False)
        self._attempt_no = 0
        self._retries = 0
        if self.queue:
            self.sim.schedule_in(0, self._attempt)
        else:
            self.active = False

    def in_queue(self) -> int:
        return len(self.queue)

    def conserved(self) -> bool:
        """Every admitted frame is resolved or still queued."""
        done = self.unicast_ok + self.unicast_fail + self.broadcast_done
        return self.accepted == done + len(self.queue)
