from __future__ import annotations

import heapq
import itertools
import logging
from collections import Counter, deque
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any, Callable

from .allocator import FrameAllocator
from .config import SimConfig
from .cube import CubeState
from .dram import DramMapping
from .exceptions import SimulationStalled
from .metrics import EventTally, IntervalRecord, MigrationStats
from .network import MeshNetwork, Packet, PacketKind
from .offload import (
    ComputeRemapTable,
    NmpScheduler,
    PageInfoCache,
    ResolvedOp,
    Role,
    SchedulePlan,
    SystemCounters,
    TouchKind,
    host_address,
)
from .paging import MigrationManager, MigrationOutcome, PageTable
from .remapper import Remapper
from .trace import NmpOp, OpTrace, page_id

# cycles without any progress before a run is declared stuck
WATCHDOG_CYCLES = 200_000

ROLES = (Role.DEST, Role.SRC1, Role.SRC2)


class IssueOutcome(StrEnum):
    ISSUED = "ISSUED"
    DEFERRED = "DEFERRED"
    STALLED = "STALLED"


@dataclass
class Controller:
    index: int
    cube: int
    queue: deque[NmpOp] = field(default_factory=deque)
    deferred: list[NmpOp] = field(default_factory=list)

    @property
    def occupancy(self) -> int:
        return len(self.queue) + len(self.deferred)


@dataclass
class InFlightOp:
    resolved: ResolvedOp
    plan: SchedulePlan
    mc: int
    issue_cycle: int
    frames: list[int]
    waiting: int = 0
    role_hops: dict[Role, int] = field(default_factory=dict)

    @property
    def seq(self) -> int:
        return self.resolved.op.seq_id


@dataclass
class EpisodeResult:
    """
    Outcome of replaying a trace once.
    """

    total_cycles: int
    ops_completed: int
    avg_hops: float
    timeline: list[IntervalRecord]
    per_cube_completions: list[int]
    host_completions: int
    per_cube_row_hit_rate: list[float]
    row_hit_rate: float
    migrations: MigrationStats
    tally: EventTally
    network_events: list[tuple[int, str, int, int]]
    migration_events: list[tuple[int, int, int, str, int, int, bool]]

    @property
    def opc(self) -> float:
        return self.ops_completed / self.total_cycles if self.total_cycles else 0.0


class Simulator:
    """
    Cycle-driven replay of an NMP-op trace on the cube mesh.

    Every cycle the simulator fires due timed events (DRAM accesses, ALU latencies), moves trace
    ops into the memory-controller queues, lets each controller issue, advances the migration
    DMA and the network, handles delivered packets, samples the system counters and closes OPC
    intervals. A controller issues an op by translating its operands, asking the scheduler for
    a plan and reserving an NMP-table entry at the compute cube; ops touching a locked page are
    set aside until the page unlocks.

    Args:
        config: Run configuration
        trace: Trace to replay
        scheduler: NMP-op scheduling technique
        remapper: Remapping policy, shared across repeats
        allocator: Frame allocation policy
        repeat: Index of this episode
    """

    def __init__(
        self,
        config: SimConfig,
        trace: OpTrace,
        scheduler: NmpScheduler,
        remapper: Remapper,
        allocator: FrameAllocator,
        repeat: int = 0,
    ) -> None:
        self.config = config
        self.trace = trace
        self.mesh = config.mesh
        self.scheduler = scheduler
        self.remapper = remapper
        self.repeat = repeat

        self.network = MeshNetwork(self.mesh, log_events=config.events)
        self.cubes = [CubeState(i, config.cube) for i in range(self.mesh.cubes)]
        self.mapping = DramMapping(self.mesh, config.cube, trace.page_size)
        self.page_table = PageTable(trace, allocator, self.mapping, config.paging.pin_cube)
        self.migrations = MigrationManager(
            self.page_table,
            self.network,
            self.mesh,
            config.paging,
            mms_cube=0,
            log_events=config.events,
        )
        controller = config.controller
        self.remap_table = ComputeRemapTable(controller.remap_table_entries)
        self.page_caches = [
            PageInfoCache(controller.page_info_entries, controller.history_length)
            for _ in range(controller.count)
        ]
        self.counters = SystemCounters(
            self.mesh.cubes,
            controller.count,
            controller.counter_decay,
            config.cube.nmp_table_entries,
            controller.queue_entries,
        )
        self.controllers = [
            Controller(i, cube)
            for i, cube in enumerate(self.mesh.corners()[: controller.count])
        ]

        self.cycle = 0
        self.interval = remapper.initial_interval()
        self._events: list[tuple[int, int, Callable[..., None], tuple[Any, ...]]] = []
        self._order = itertools.count()
        self._feed = 0
        self.inflight: dict[int, InFlightOp] = {}

        self.issued = 0
        self.completed = 0
        self.host_completions = 0
        self.last_completion = -1
        self._last_progress = 0
        self.draining = False
        self.page_accesses: Counter[int] = Counter()
        self.nmp_buffer_accesses = 0
        self.memory_bits = 0
        self.packet_hops = 0
        self.packets_delivered = 0

        self.timeline: list[IntervalRecord] = []
        self.last_completion_share = [0.0] * self.mesh.cubes
        self._interval_start = 0
        self._interval_length = self.interval
        self._interval_ops = 0
        self._interval_hops = 0
        self._interval_packets = 0
        self._interval_completions = [0] * self.mesh.cubes
        self._interval_dram = (0, 0)
        self._counter_dram = [(0, 0)] * self.mesh.cubes

    # -------------------------------------------------------------------------
    # Action context
    # -------------------------------------------------------------------------
    def request_migration(self, page: int, dst_cube: int) -> MigrationOutcome:
        return self.migrations.request_migration(page, dst_cube, self.cycle)

    def set_compute_remap(self, page: int, cube: int) -> None:
        self.remap_table.set(page, cube)

    def set_mapping(self, mapping: DramMapping) -> None:
        self.mapping = mapping
        self.page_table.mapping = mapping

    # -------------------------------------------------------------------------
    # Main loop
    # -------------------------------------------------------------------------
    @property
    def done(self) -> bool:
        return self.completed == len(self.trace.ops)

    def idle(self) -> bool:
        return self.network.idle() and self.migrations.idle() and not self._events

    def run(self) -> EpisodeResult:
        """
        Replay the whole trace, then let migrations and the network drain.

        Raises:
            SimulationStalled: If the cycle budget is exceeded or nothing progresses
        """
        self.remapper.begin_episode(self)
        logging.info(
            "repeat %s: replaying %s ops (%s, %s)",
            self.repeat,
            len(self.trace.ops),
            self.config.technique,
            self.config.remapper,
        )
        while not self.done:
            self.step()
            if self.cycle > self.config.max_cycles:
                raise SimulationStalled(self.cycle, "cycle budget exceeded")
            if self.cycle - self._last_progress > WATCHDOG_CYCLES:
                raise SimulationStalled(self.cycle, "no progress")

        while not self.idle():
            self.step()
            if self.cycle - self._last_progress > WATCHDOG_CYCLES:
                raise SimulationStalled(self.cycle, "migrations do not drain")

        result = self.result()
        self.remapper.end_episode(self, result.opc)
        logging.info(
            "repeat %s finished after %s cycles (OPC %.4f)",
            self.repeat,
            result.total_cycles,
            result.opc,
        )
        return result

    def step(self) -> None:
        cycle = self.cycle
        self._fire_events(cycle)
        self._feed_controllers()
        for controller in self.controllers:
            self._issue(controller, cycle)

        dma = self.migrations.step_dma(cycle)
        for request in dma.completed:
            self._progress(cycle)
            for cache in self.page_caches:
                entry = cache.get(request.page)
                if entry is not None:
                    entry.touch(TouchKind.MIGRATION, request.latency)
        if dma.emitted:
            self._progress(cycle)

        for packet in self.network.step(cycle):
            self._progress(cycle)
            self._deliver(packet, cycle)

        if cycle % self.config.controller.counter_period == 0:
            self._sample_counters()

        if not self.draining:
            if self.done:
                self.draining = True
                self._close_interval(cycle + 1, notify=False)
            elif cycle + 1 >= self._interval_start + self._interval_length:
                self._close_interval(cycle + 1, notify=True)
            self.remapper.on_cycle(self, cycle)

        self.cycle += 1

    def _progress(self, cycle: int) -> None:
        self._last_progress = cycle

    def _at(self, cycle: int, fn: Callable[..., None], *args: Any) -> None:
        heapq.heappush(self._events, (cycle, next(self._order), fn, args))

    def _fire_events(self, cycle: int) -> None:
        while self._events and self._events[0][0] <= cycle:
            _, _, fn, args = heapq.heappop(self._events)
            self._progress(cycle)
            fn(cycle, *args)

    def _feed_controllers(self) -> None:
        ops = self.trace.ops
        capacity = self.config.controller.queue_entries
        count = len(self.controllers)
        for _ in range(count):
            if self._feed >= len(ops):
                return
            controller = self.controllers[self._feed % count]
            if len(controller.queue) >= capacity:
                return
            controller.queue.append(ops[self._feed])
            self._feed += 1

    # -------------------------------------------------------------------------
    # Issue
    # -------------------------------------------------------------------------
    def _issue(self, controller: Controller, cycle: int) -> None:
        issued = 0
        width = self.config.controller.issue_width
        for op in list(controller.deferred):
            if issued >= width:
                return
            if self._try_issue(controller, op, cycle) == IssueOutcome.ISSUED:
                controller.deferred.remove(op)
                issued += 1

        while issued < width and controller.queue:
            op = controller.queue[0]
            outcome = self._try_issue(controller, op, cycle)
            if outcome == IssueOutcome.STALLED:
                return
            controller.queue.popleft()
            if outcome == IssueOutcome.DEFERRED:
                controller.deferred.append(op)
            else:
                issued += 1

    def resolve(self, op: NmpOp) -> ResolvedOp | None:
        """
        Translate the operands of an op; None while one of its pages is locked.
        """
        vaddrs = dict(zip(ROLES, op.operands()))
        pages: dict[Role, int] = {}
        paddrs: dict[Role, int] = {}
        cubes: dict[Role, int] = {}
        for role, vaddr in vaddrs.items():
            paddr = self.page_table.translate(vaddr, op.process_id)
            if paddr is None:
                return None
            pages[role] = page_id(op.process_id, vaddr, self.trace.page_size)
            paddrs[role] = paddr
            cubes[role] = self.mapping.cube_of(paddr)
        return ResolvedOp(op, pages, paddrs, cubes)

    def _try_issue(self, controller: Controller, op: NmpOp, cycle: int) -> IssueOutcome:
        resolved = self.resolve(op)
        if resolved is None:
            return IssueOutcome.DEFERRED

        plan = self.scheduler.schedule(resolved, self.remap_table)
        if plan.host_execute:
            cache = self.scheduler.host_cache(op)
            assert cache is not None
            lines = {
                cache.line(host_address(op, op.operands()[ROLES.index(r)]))
                for r in plan.host_fetch
            }
            if sum(line not in cache.mshr for line in lines) > cache.mshr_free():
                return IssueOutcome.STALLED
        else:
            table = self.cubes[plan.compute_cube].nmp_table
            if not table.insert(op.seq_id):
                return IssueOutcome.STALLED
            self.nmp_buffer_accesses += 1

        frames = [self.page_table.frame_of(p) for p in resolved.paddrs.values()]
        for frame in frames:
            self.page_table.pin(frame)

        cache = self.page_caches[controller.index]
        for page in dict.fromkeys(resolved.pages.values()):
            entry = cache.touch(page, TouchKind.ACCESS)
            if not plan.host_execute:
                entry.last_compute_cube = plan.compute_cube
            entry.last_src1_cube = resolved.cubes[Role.SRC1]
        for page in resolved.pages.values():
            self.page_accesses[page] += 1

        inflight = InFlightOp(resolved, plan, controller.index, cycle, frames)
        self.inflight[op.seq_id] = inflight
        self.issued += 1
        self._progress(cycle)

        if plan.host_execute:
            self._start_host(inflight, controller, cycle)
        else:
            request = Packet(
                PacketKind.NMP_REQ,
                controller.cube,
                plan.compute_cube,
                self.mesh.header_bits,
                op_ref=op.seq_id,
            )
            self.network.inject(request, cycle)
        return IssueOutcome.ISSUED

    # -------------------------------------------------------------------------
    # Execution
    # -------------------------------------------------------------------------
    def _dram(self, cube: int, paddr: int, cycle: int) -> int:
        coord = self.mapping.map(paddr)
        self.memory_bits += self.mesh.data_bits
        return self.cubes[cube].schedule_access(coord.vault, coord.bank, coord.row, cycle)

    def _start_compute(self, inflight: InFlightOp, cycle: int) -> None:
        plan, resolved = inflight.plan, inflight.resolved
        inflight.waiting = len(plan.local_roles) + len(plan.fetch_roles)
        for role in plan.local_roles:
            inflight.role_hops[role] = 0
            ready = self._dram(plan.compute_cube, resolved.paddrs[role], cycle)
            self._at(ready, self._operand_ready, inflight.seq)
        for role in plan.fetch_roles:
            request = Packet(
                PacketKind.DATA_REQ,
                plan.compute_cube,
                resolved.cubes[role],
                self.mesh.header_bits,
                op_ref=inflight.seq,
                tag=("op", role),
            )
            self.network.inject(request, cycle)

    def _operand_ready(self, cycle: int, seq: int) -> None:
        inflight = self.inflight[seq]
        inflight.waiting -= 1
        if inflight.waiting > 0:
            return
        if inflight.plan.host_execute:
            self._at(cycle + self.config.controller.host_alu_cycles, self._complete, seq)
        else:
            self._at(cycle + self.config.cube.alu_cycles, self._finish_compute, seq)

    def _finish_compute(self, cycle: int, seq: int) -> None:
        inflight = self.inflight[seq]
        plan, resolved = inflight.plan, inflight.resolved
        self.cubes[plan.compute_cube].nmp_table.retire(seq, cycle)
        self.nmp_buffer_accesses += 1

        if plan.result_to is None:
            ready = self._dram(plan.compute_cube, resolved.paddrs[Role.DEST], cycle)
            self._at(ready, self._acknowledge, seq, plan.compute_cube)
        else:
            result = Packet(
                PacketKind.DATA_RESP,
                plan.compute_cube,
                plan.result_to,
                self.mesh.data_bits,
                op_ref=seq,
                tag=("result", Role.DEST),
            )
            self.network.inject(result, cycle)

    def _acknowledge(self, cycle: int, seq: int, cube: int) -> None:
        inflight = self.inflight[seq]
        ack = Packet(
            PacketKind.ACK,
            cube,
            self.controllers[inflight.mc].cube,
            self.mesh.header_bits,
            op_ref=seq,
        )
        self.network.inject(ack, cycle)

    def _respond(self, cycle: int, request: Packet) -> None:
        response = Packet(
            PacketKind.DATA_RESP,
            request.dst_cube,
            request.src_cube,
            self.mesh.data_bits,
            op_ref=request.op_ref,
            tag=request.tag,
        )
        self.network.inject(response, cycle)

    def _start_host(self, inflight: InFlightOp, controller: Controller, cycle: int) -> None:
        op, resolved = inflight.resolved.op, inflight.resolved
        cache = self.scheduler.host_cache(op)
        assert cache is not None
        inflight.waiting = len(inflight.plan.host_fetch)
        for role, vaddr in zip(ROLES, op.operands()):
            address = host_address(op, vaddr)
            if role in inflight.plan.host_fetch:
                cache.allocate_mshr(address)
                request = Packet(
                    PacketKind.DATA_REQ,
                    controller.cube,
                    resolved.cubes[role],
                    self.mesh.header_bits,
                    op_ref=op.seq_id,
                    tag=("host", role),
                )
                self.network.inject(request, cycle)
            else:
                cache.access(address)
                inflight.role_hops[role] = 0
        if inflight.waiting == 0:
            self._at(cycle + self.config.controller.host_alu_cycles, self._complete, op.seq_id)

    def _deliver(self, packet: Packet, cycle: int) -> None:
        if packet.kind in (PacketKind.MIGRATION_DATA, PacketKind.MIGRATION_ACK):
            self.migrations.on_delivery(packet, cycle)
            if (
                packet.kind == PacketKind.MIGRATION_DATA
                and self.config.technique == "PEI"
                and self.config.remapper == "AIMM"
            ):
                self._interval_ops += 1
            return

        self.packet_hops += packet.hop_count
        self.packets_delivered += 1
        self._interval_hops += packet.hop_count
        self._interval_packets += 1

        assert packet.op_ref is not None
        inflight = self.inflight[packet.op_ref]
        match packet.kind:
            case PacketKind.NMP_REQ:
                self._start_compute(inflight, cycle)
            case PacketKind.DATA_REQ:
                _, role = packet.tag  # type: ignore
                paddr = inflight.resolved.paddrs[role]
                ready = self._dram(packet.dst_cube, paddr, cycle)
                self._at(ready, self._respond, packet)
            case PacketKind.DATA_RESP:
                source, role = packet.tag  # type: ignore
                inflight.role_hops[role] = packet.hop_count
                match source:
                    case "op":
                        self._operand_ready(cycle, inflight.seq)
                    case "host":
                        op = inflight.resolved.op
                        cache = self.scheduler.host_cache(op)
                        assert cache is not None
                        address = host_address(op, op.operands()[ROLES.index(role)])
                        cache.fill(address)
                        cache.release_mshr(address)
                        self._operand_ready(cycle, inflight.seq)
                    case "result":
                        paddr = inflight.resolved.paddrs[Role.DEST]
                        read = self._dram(packet.dst_cube, paddr, cycle)
                        written = self._dram(packet.dst_cube, paddr, read)
                        self._at(written, self._acknowledge, inflight.seq, packet.dst_cube)
            case PacketKind.ACK:
                self._complete(cycle, inflight.seq)

    def _complete(self, cycle: int, seq: int) -> None:
        inflight = self.inflight.pop(seq)
        resolved, plan = inflight.resolved, inflight.plan
        latency = cycle - inflight.issue_cycle

        hops: dict[int, int] = {}
        for role, page in resolved.pages.items():
            hops[page] = max(hops.get(page, 0), inflight.role_hops.get(role, 0))
        cache = self.page_caches[inflight.mc]
        for page, page_hops in hops.items():
            cache.touch(page, TouchKind.HOPS, page_hops)
            cache.touch(page, TouchKind.LATENCY, latency)

        if plan.host_execute:
            self.host_completions += 1
        else:
            self.cubes[plan.compute_cube].completions += 1
            self._interval_completions[plan.compute_cube] += 1

        for frame in inflight.frames:
            self.page_table.unpin(frame)
        self.completed += 1
        self._interval_ops += 1
        self.last_completion = cycle

        self.scheduler.on_complete(resolved, plan)
        self.remapper.on_op_complete(self, resolved, plan)

    # -------------------------------------------------------------------------
    # Counters and intervals
    # -------------------------------------------------------------------------
    def _dram_totals(self) -> tuple[int, int]:
        return (
            sum(c.row_buffer_hits for c in self.cubes),
            sum(c.row_buffer_accesses for c in self.cubes),
        )

    def _sample_counters(self) -> None:
        rates: list[float | None] = []
        for k, cube in enumerate(self.cubes):
            hits, accesses = self._counter_dram[k]
            window = cube.row_buffer_accesses - accesses
            rates.append(
                (cube.row_buffer_hits - hits) / window if window else None
            )
            self._counter_dram[k] = (cube.row_buffer_hits, cube.row_buffer_accesses)
        self.counters.update(
            [c.nmp_table.occupancy for c in self.cubes],
            rates,
            [c.occupancy for c in self.controllers],
        )

    def _close_interval(self, end: int, notify: bool) -> None:
        length = end - self._interval_start
        if length <= 0:
            return
        opc = self._interval_ops / length
        hits, accesses = self._dram_totals()
        window = accesses - self._interval_dram[1]
        self.timeline.append(
            IntervalRecord(
                interval=len(self.timeline),
                start_cycle=self._interval_start,
                cycles=length,
                ops=self._interval_ops,
                opc=opc,
                avg_hops=(
                    self._interval_hops / self._interval_packets
                    if self._interval_packets
                    else 0.0
                ),
                per_cube_completions=list(self._interval_completions),
                row_hit_rate=(hits - self._interval_dram[0]) / window if window else 0.0,
            )
        )
        total = sum(self._interval_completions)
        self.last_completion_share = [
            c / total if total else 0.0 for c in self._interval_completions
        ]

        self._interval_start = end
        self._interval_ops = 0
        self._interval_hops = 0
        self._interval_packets = 0
        self._interval_completions = [0] * self.mesh.cubes
        self._interval_dram = (hits, accesses)

        if notify:
            self.remapper.on_interval(self, end, opc)
        self._interval_length = self.interval

    # -------------------------------------------------------------------------
    # Results
    # -------------------------------------------------------------------------
    def migration_stats(self) -> MigrationStats:
        m = self.migrations
        total_accesses = sum(self.page_accesses.values())
        migrated_accesses = sum(self.page_accesses[p] for p in m.migrated_pages)
        return MigrationStats(
            requested=m.requested,
            completed=m.completed,
            dropped_full=m.dropped_full,
            dropped_in_flight=m.dropped_in_flight,
            dropped_noop=m.dropped_noop,
            aborted=m.aborted,
            mean_latency=sum(m.latencies) / len(m.latencies) if m.latencies else None,
            pages_migrated_fraction=(
                len(m.migrated_pages) / len(self.page_table) if len(self.page_table) else 0.0
            ),
            accesses_to_migrated_fraction=(
                migrated_accesses / total_accesses if total_accesses else 0.0
            ),
        )

    def tally(self) -> EventTally:
        return EventTally(
            network_bit_hops=self.network.bit_hops,
            memory_bits=self.memory_bits + 2 * self.migrations.bits_moved,
            page_info_accesses=sum(c.accesses for c in self.page_caches),
            nmp_buffer_accesses=self.nmp_buffer_accesses,
            migration_queue_accesses=self.migrations.queue_accesses,
            mdma_accesses=self.migrations.dma_accesses,
        )

    def result(self) -> EpisodeResult:
        hits, accesses = self._dram_totals()
        return EpisodeResult(
            total_cycles=self.last_completion + 1,
            ops_completed=self.completed,
            avg_hops=self.packet_hops / self.packets_delivered if self.packets_delivered else 0.0,
            timeline=list(self.timeline),
            per_cube_completions=[c.completions for c in self.cubes],
            host_completions=self.host_completions,
            per_cube_row_hit_rate=[c.hit_rate for c in self.cubes],
            row_hit_rate=hits / accesses if accesses else 0.0,
            migrations=self.migration_stats(),
            tally=self.tally(),
            network_events=list(self.network.events),
            migration_events=list(self.migrations.events),
        )
