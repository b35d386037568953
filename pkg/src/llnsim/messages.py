"""Routing control messages, their wire sizes, and sequence-number arithmetic."""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

# 16-bit link-local addresses; the top value is reserved for broadcast
BROADCAST = 0xFFFF

SEQ_MOD = 1 << 16
SEQ_HALF = 1 << 15


class MsgKind(Enum):
    RREQ = "rreq"
    RREP = "rrep"
    RREP_ACK = "rrep_ack"
    RERR = "rerr"
    HELLO = "hello"
    DIO = "dio"
    DIS = "dis"
    DAO = "dao"


# encoded byte size per message kind; HELLO grows with its neighbor list
BASE_SIZES = {
    MsgKind.RREQ: 24,
    MsgKind.RREP: 24,
    MsgKind.RREP_ACK: 12,
    MsgKind.RERR: 20,
    MsgKind.HELLO: 12,
    MsgKind.DIO: 36,
    MsgKind.DIS: 8,
    MsgKind.DAO: 28,
}
HELLO_NEIGHBOR_BYTES = 2


@dataclass(frozen=True, slots=True)
class RouteMsg:
    """Immutable control message; forwarding produces a fresh copy."""

    kind: MsgKind
    originator: int
    destination: int
    seq: int = 0
    hop_count: int = 0
    trigger: bool = False
    build: bool = False
    rrep_required: bool = False
    hello_neighbors: tuple[int, ...] = ()
    rank: int = 0
    dao_parent: int | None = None
    unreachable: int | None = None  # RERR: destination whose route broke

    def forwarded(self) -> "RouteMsg":
        return replace(self, hop_count=self.hop_count + 1)


def encoded_size(msg: RouteMsg) -> int:
    size = BASE_SIZES[msg.kind]
    if msg.kind is MsgKind.HELLO:
        size += HELLO_NEIGHBOR_BYTES * len(msg.hello_neighbors)
    return size


def seq_newer(a: int, b: int) -> bool:
    """True when a is fresher than b under circular 16-bit comparison."""
    return 0 < (a - b) % SEQ_MOD < SEQ_HALF


def next_seq(current: int) -> int:
    return (current + 1) % SEQ_MOD
