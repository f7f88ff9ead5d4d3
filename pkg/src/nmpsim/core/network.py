from __future__ import annotations

import heapq
import itertools
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum, StrEnum

from .config import MeshConfig


class Port(IntEnum):
    """
    Router ports. LOCAL is the injection/ejection port shared by the cube and its controller.
    """

    LOCAL = 0
    EAST = 1
    WEST = 2
    NORTH = 3
    SOUTH = 4


OPPOSITE = {
    Port.EAST: Port.WEST,
    Port.WEST: Port.EAST,
    Port.NORTH: Port.SOUTH,
    Port.SOUTH: Port.NORTH,
}

STEP = {
    Port.EAST: (1, 0),
    Port.WEST: (-1, 0),
    Port.NORTH: (0, 1),
    Port.SOUTH: (0, -1),
}


class PacketKind(StrEnum):
    NMP_REQ = "NMP_REQ"
    DATA_REQ = "DATA_REQ"
    DATA_RESP = "DATA_RESP"
    ACK = "ACK"
    MIGRATION_DATA = "MIGRATION_DATA"
    MIGRATION_ACK = "MIGRATION_ACK"


# one message class per virtual channel so requests never wait behind their responses
VC_CLASS = {
    PacketKind.NMP_REQ: 0,
    PacketKind.DATA_REQ: 1,
    PacketKind.DATA_RESP: 2,
    PacketKind.ACK: 3,
    PacketKind.MIGRATION_DATA: 4,
    PacketKind.MIGRATION_ACK: 3,
}


@dataclass(slots=True)
class Packet:
    """
    A packet travelling the mesh.

    Attributes:
        kind: Message class
        src_cube: Router where the packet was injected
        dst_cube: Router where it is ejected
        payload_bits: Size on the wire
        op_ref: Sequence id of the NMP-op the packet belongs to, if any
        tag: Free-form routing information for the receiver (operand role, migration id)
        packet_id: Assigned at injection
        hop_count: Links traversed so far
        inject_cycle: Cycle of injection
        deliver_cycle: Cycle of ejection, once delivered
    """

    kind: PacketKind
    src_cube: int
    dst_cube: int
    payload_bits: int
    op_ref: int | None = None
    tag: object = None
    packet_id: int = -1
    hop_count: int = 0
    inject_cycle: int = -1
    deliver_cycle: int = -1


def route_next_hop(mesh: MeshConfig, cur: int, dst: int) -> Port:
    """
    Output port of dimension-ordered routing: correct x first, then y.

    Returns LOCAL when the packet has reached its destination.
    """
    cx, cy = mesh.coord(cur)
    dx, dy = mesh.coord(dst)
    if dx > cx:
        return Port.EAST
    if dx < cx:
        return Port.WEST
    if dy > cy:
        return Port.NORTH
    if dy < cy:
        return Port.SOUTH
    return Port.LOCAL


@dataclass
class _Router:
    slots: int
    depth: int
    buffers: list[deque[Packet]] = field(init=False)
    credits: list[int] = field(init=False)
    busy_until: list[int] = field(init=False)
    round_robin: list[int] = field(init=False)
    occupancy: int = 0

    def __post_init__(self) -> None:
        self.buffers = [deque() for _ in range(self.slots)]
        self.credits = [self.depth] * self.slots
        self.busy_until = [0] * len(Port)
        self.round_robin = [0] * len(Port)


class MeshNetwork:
    """
    Cycle-level model of the cube mesh.

    Each router buffers packets per input port and virtual channel. A buffer slot is a credit:
    an upstream router only forwards into a downstream buffer with a free credit, so
    congestion stalls packets instead of dropping them. Every cycle each free output grants one
    head-of-line packet, round-robin over the input buffers; the packet then occupies the link
    for its serialization time and arrives `router_stages + serialization` cycles later.
    Injection queues are unbounded.
    """

    def __init__(self, mesh: MeshConfig, log_events: bool = False) -> None:
        self.mesh = mesh
        self.vc_count = mesh.vc_count
        slots = len(Port) * mesh.vc_count
        self.routers = [_Router(slots, mesh.vc_buffer_depth) for _ in range(mesh.cubes)]
        self._arrivals: list[tuple[int, int, int, int, Packet]] = []
        self._order = itertools.count()
        self._ids = itertools.count()

        self.injected = 0
        self.delivered = 0
        self.bit_hops = 0
        self.log_events = log_events
        self.events: list[tuple[int, str, int, int]] = []

    @property
    def in_flight(self) -> int:
        return self.injected - self.delivered

    def buffered_count(self) -> int:
        """
        Packets held in router buffers or on links.
        """
        return sum(r.occupancy for r in self.routers) + len(self._arrivals)

    def idle(self) -> bool:
        return self.in_flight == 0

    def serialization(self, packet: Packet) -> int:
        return -(-packet.payload_bits // self.mesh.link_bits)

    def _log(self, cycle: int, event: str, packet: Packet, cube: int) -> None:
        if self.log_events:
            self.events.append((cycle, event, packet.packet_id, cube))

    def inject(self, packet: Packet, cycle: int) -> Packet:
        packet.packet_id = next(self._ids)
        packet.inject_cycle = cycle
        router = self.routers[packet.src_cube]
        vc = VC_CLASS[packet.kind] % self.vc_count
        router.buffers[Port.LOCAL * self.vc_count + vc].append(packet)
        router.occupancy += 1
        self.injected += 1
        self._log(cycle, "inject", packet, packet.src_cube)
        return packet

    def _deliver(self, packet: Packet, cycle: int, delivered: list[Packet]) -> None:
        packet.deliver_cycle = cycle
        self.delivered += 1
        delivered.append(packet)
        self._log(cycle, "deliver", packet, packet.dst_cube)

    def step(self, cycle: int) -> list[Packet]:
        """
        Advance the network by one cycle.

        Returns:
            list[Packet]: Packets ejected at their destination during this cycle
        """
        delivered: list[Packet] = []

        while self._arrivals and self._arrivals[0][0] <= cycle:
            _, _, cube, slot, packet = heapq.heappop(self._arrivals)
            packet.hop_count += 1
            self.bit_hops += packet.payload_bits
            self._log(cycle, "hop", packet, cube)
            router = self.routers[cube]
            if packet.dst_cube == cube:
                router.credits[slot] += 1
                self._deliver(packet, cycle, delivered)
            else:
                router.buffers[slot].append(packet)
                router.occupancy += 1

        for cube, router in enumerate(self.routers):
            if router.occupancy:
                self._arbitrate(cube, router, cycle, delivered)

        return delivered

    def _arbitrate(
        self, cube: int, router: _Router, cycle: int, delivered: list[Packet]
    ) -> None:
        requests: dict[Port, list[int]] = {}
        for slot, buffer in enumerate(router.buffers):
            if buffer:
                port = route_next_hop(self.mesh, cube, buffer[0].dst_cube)
                requests.setdefault(port, []).append(slot)

        for port, slots in requests.items():
            if port == Port.LOCAL:
                # ejection does not use a link
                for slot in slots:
                    packet = router.buffers[slot].popleft()
                    router.occupancy -= 1
                    self._release(cube, slot)
                    self._deliver(packet, cycle, delivered)
                continue

            if router.busy_until[port] > cycle:
                continue

            x, y = self.mesh.coord(cube)
            sx, sy = STEP[port]
            neighbor = self.mesh.cube_at(x + sx, y + sy)
            downstream = self.routers[neighbor]

            start = router.round_robin[port]
            ordered = sorted(slots, key=lambda s: (s - start) % len(router.buffers))
            for slot in ordered:
                vc = slot % self.vc_count
                in_slot = OPPOSITE[port] * self.vc_count + vc
                if downstream.credits[in_slot] == 0:
                    continue

                packet = router.buffers[slot].popleft()
                router.occupancy -= 1
                self._release(cube, slot)
                downstream.credits[in_slot] -= 1

                ser = self.serialization(packet)
                router.busy_until[port] = cycle + ser
                router.round_robin[port] = (slot + 1) % len(router.buffers)
                heapq.heappush(
                    self._arrivals,
                    (
                        cycle + self.mesh.router_stages + ser,
                        next(self._order),
                        neighbor,
                        in_slot,
                        packet,
                    ),
                )
                break

    def _release(self, cube: int, slot: int) -> None:
        # injection buffers hold no credits
        if slot >= self.vc_count:
            self.routers[cube].credits[slot] += 1
