import random

import pytest

from nmpsim.core import MeshConfig, MeshNetwork, Packet, PacketKind, Port, route_next_hop

MESH = MeshConfig()


def run_until_delivered(network: MeshNetwork, limit: int = 10_000) -> dict[int, int]:
    delivered: dict[int, int] = {}
    cycle = 0
    while not network.idle():
        for packet in network.step(cycle):
            delivered[packet.packet_id] = cycle
        cycle += 1
        assert cycle < limit, "network did not drain"
    return delivered


# -----------------------------------------------------------------------------
# Routing
# -----------------------------------------------------------------------------
@pytest.mark.parametrize(
    "cur,dst,port",
    [
        (0, 0, Port.LOCAL),
        (0, 3, Port.EAST),
        (3, 0, Port.WEST),
        (0, 12, Port.NORTH),
        (12, 0, Port.SOUTH),
        (0, 15, Port.EAST),
        (3, 15, Port.NORTH),
    ],
)
def test_xy_routing(cur: int, dst: int, port: Port):
    assert route_next_hop(MESH, cur, dst) == port


@pytest.mark.parametrize("mesh", [MESH, MeshConfig(width=8, height=8)])
def test_route_length_is_manhattan_distance(mesh: MeshConfig):
    for src in range(mesh.cubes):
        for dst in range(mesh.cubes):
            hops, cur = 0, src
            while (port := route_next_hop(mesh, cur, dst)) != Port.LOCAL:
                x, y = mesh.coord(cur)
                dx, dy = {
                    Port.EAST: (1, 0),
                    Port.WEST: (-1, 0),
                    Port.NORTH: (0, 1),
                    Port.SOUTH: (0, -1),
                }[port]
                cur = mesh.cube_at(x + dx, y + dy)
                hops += 1
            assert hops == mesh.manhattan(src, dst)


# -----------------------------------------------------------------------------
# Timing
# -----------------------------------------------------------------------------
def test_adjacent_header_packet_latency():
    network = MeshNetwork(MESH)
    packet = network.inject(Packet(PacketKind.NMP_REQ, 0, 1, MESH.header_bits), 0)

    delivered = run_until_delivered(network)

    # three router stages plus one serialization cycle
    assert delivered[packet.packet_id] == 4
    assert packet.hop_count == 1
    assert packet.deliver_cycle == 4


def test_data_packet_serializes_longer():
    network = MeshNetwork(MESH)
    packet = network.inject(Packet(PacketKind.DATA_RESP, 0, 1, MESH.data_bits), 0)
    run_until_delivered(network)
    assert packet.deliver_cycle == 0 + MESH.router_stages + 4


def test_local_packet_is_ejected_without_hops():
    network = MeshNetwork(MESH)
    packet = network.inject(Packet(PacketKind.ACK, 5, 5, MESH.header_bits), 0)
    run_until_delivered(network)
    assert packet.hop_count == 0
    assert network.bit_hops == 0


def test_bit_hops_accumulate_per_link():
    network = MeshNetwork(MESH)
    network.inject(Packet(PacketKind.DATA_RESP, 0, 15, MESH.data_bits), 0)
    run_until_delivered(network)
    assert network.bit_hops == 6 * MESH.data_bits


def test_event_log():
    network = MeshNetwork(MESH, log_events=True)
    packet = network.inject(Packet(PacketKind.ACK, 0, 1, MESH.header_bits), 0)
    run_until_delivered(network)
    kinds = [e[1] for e in network.events if e[2] == packet.packet_id]
    assert kinds == ["inject", "hop", "deliver"]


# -----------------------------------------------------------------------------
# Conservation under load
# -----------------------------------------------------------------------------
@pytest.mark.parametrize("seed", range(5))
def test_random_traffic_is_conserved(seed: int):
    rng = random.Random(seed)
    network = MeshNetwork(MESH)
    expected: dict[int, Packet] = {}

    delivered: list[Packet] = []
    for cycle in range(200):
        for _ in range(rng.randint(0, 6)):
            kind = rng.choice(list(PacketKind))
            bits = MESH.data_bits if kind == PacketKind.DATA_RESP else MESH.header_bits
            packet = Packet(kind, rng.randrange(16), rng.randrange(16), bits)
            network.inject(packet, cycle)
            expected[packet.packet_id] = packet
        delivered.extend(network.step(cycle))
        assert network.buffered_count() == network.in_flight

    cycle = 200
    while not network.idle():
        delivered.extend(network.step(cycle))
        assert network.buffered_count() == network.in_flight
        cycle += 1
        assert cycle < 100_000

    assert sorted(p.packet_id for p in delivered) == sorted(expected)
    for packet in delivered:
        assert packet.dst_cube == expected[packet.packet_id].dst_cube
        assert packet.hop_count == MESH.manhattan(packet.src_cube, packet.dst_cube)
        assert packet.deliver_cycle >= packet.inject_cycle


def offer_traffic(mesh: MeshConfig, packets: int, rate: int, seed: int) -> None:
    rng = random.Random(seed)
    network = MeshNetwork(mesh)
    expected: dict[int, Packet] = {}
    delivered: dict[int, Packet] = {}

    cycle = 0
    while len(expected) < packets or not network.idle():
        for _ in range(min(rng.randint(0, rate), packets - len(expected))):
            kind = rng.choice(list(PacketKind))
            bits = mesh.data_bits if kind == PacketKind.DATA_RESP else mesh.header_bits
            packet = Packet(kind, rng.randrange(mesh.cubes), rng.randrange(mesh.cubes), bits)
            network.inject(packet, cycle)
            expected[packet.packet_id] = packet
        for packet in network.step(cycle):
            assert packet.packet_id not in delivered
            delivered[packet.packet_id] = packet
        cycle += 1
        assert cycle < 10 * packets, "network did not drain"

    assert delivered.keys() == expected.keys()
    assert network.injected == network.delivered == packets
    for packet in delivered.values():
        assert packet.hop_count == mesh.manhattan(packet.src_cube, packet.dst_cube)


def test_sustained_traffic_loses_and_duplicates_nothing():
    offer_traffic(MESH, packets=50_000, rate=4, seed=7)


def test_large_mesh_routes_random_pairs_minimally():
    offer_traffic(MeshConfig(width=8, height=8), packets=10_000, rate=8, seed=3)
