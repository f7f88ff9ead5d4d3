from __future__ import annotations

import heapq
import itertools
import logging
from collections import Counter, deque
from dataclasses import dataclass, field
from enum import StrEnum

from .allocator import FrameAllocator
from .config import MeshConfig, PagingConfig
from .dram import DramMapping
from .exceptions import InvalidPage, SegmentationFault
from .network import MeshNetwork, Packet, PacketKind
from .trace import OpTrace, page_id, page_process


class Permission(StrEnum):
    READ_ONLY = "READ_ONLY"
    READ_WRITE = "READ_WRITE"


@dataclass(slots=True)
class PageEntry:
    frame: int
    permission: Permission = Permission.READ_WRITE
    locked: bool = False


class PageTable:
    """
    Virtual page to frame mapping of all processes.

    The first touch of a page allocates a frame through the allocation policy. Locked pages
    (blocking migration in flight) translate to None and the caller retries later. Accesses in
    flight against a frame are tracked with `pin`/`unpin` so migrations can wait for them.

    Args:
        trace: Source of process extents and read-only regions
        allocator: Frame allocation policy
        mapping: Current physical to DRAM mapping, used to find a frame's host cube
        pin_cube: Cube every first touch prefers, if any
    """

    def __init__(
        self,
        trace: OpTrace,
        allocator: FrameAllocator,
        mapping: DramMapping,
        pin_cube: int | None = None,
    ) -> None:
        self.trace = trace
        self.page_size = trace.page_size
        self.allocator = allocator
        self.mapping = mapping
        self.pin_cube = pin_cube
        self.entries: dict[int, PageEntry] = {}
        self.outstanding: Counter[int] = Counter()
        self._extents = {p.process_id: p for p in trace.processes}

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, page: int) -> PageEntry | None:
        return self.entries.get(page)

    def host_cube(self, page: int) -> int:
        entry = self.entries.get(page)
        if entry is None:
            raise InvalidPage(page)
        return self.mapping.cube_of_frame(entry.frame)

    def touch(self, vaddr: int, process_id: int) -> PageEntry:
        """
        Mapping of the page holding `vaddr`, allocating a frame on first touch.

        Raises:
            SegmentationFault: If `vaddr` lies outside the process's extent
        """
        extent = self._extents.get(process_id)
        if extent is None or not extent.contains(vaddr):
            raise SegmentationFault(process_id, vaddr)

        page = page_id(process_id, vaddr, self.page_size)
        entry = self.entries.get(page)
        if entry is None:
            frame = self.allocator.allocate(page, process_id, self.pin_cube)
            permission = (
                Permission.READ_ONLY
                if self.trace.is_read_only(process_id, vaddr)
                else Permission.READ_WRITE
            )
            entry = PageEntry(frame, permission)
            self.entries[page] = entry
        return entry

    def translate(self, vaddr: int, process_id: int) -> int | None:
        """
        Physical address of `vaddr`, or None while the page is locked by a migration.
        """
        entry = self.touch(vaddr, process_id)
        if entry.locked:
            return None
        return entry.frame * self.page_size + vaddr % self.page_size

    def frame_of(self, paddr: int) -> int:
        return paddr // self.page_size

    def pin(self, frame: int) -> None:
        self.outstanding[frame] += 1

    def unpin(self, frame: int) -> None:
        self.outstanding[frame] -= 1
        if self.outstanding[frame] <= 0:
            del self.outstanding[frame]

    def remap(self, page: int, frame: int) -> int:
        """
        Point `page` at a new frame and return the old one.
        """
        entry = self.entries[page]
        old = entry.frame
        entry.frame = frame
        return old


class MigrationMode(StrEnum):
    BLOCKING = "BLOCKING"
    NON_BLOCKING = "NON_BLOCKING"


class MigrationState(StrEnum):
    QUEUED = "QUEUED"
    DRAINING = "DRAINING"
    DMA_ACTIVE = "DMA_ACTIVE"
    AWAITING_ACK = "AWAITING_ACK"
    UPDATING = "UPDATING"
    COMPLETE = "COMPLETE"
    ABORTED = "ABORTED"


class MigrationOutcome(StrEnum):
    QUEUED = "QUEUED"
    DROPPED_FULL = "DROPPED_FULL"
    DROPPED_IN_FLIGHT = "DROPPED_IN_FLIGHT"
    DROPPED_NOOP = "DROPPED_NOOP"


@dataclass
class MigrationRequest:
    migration_id: int
    page: int
    src_cube: int
    dst_cube: int
    mode: MigrationMode
    state: MigrationState = MigrationState.QUEUED
    request_cycle: int = 0
    start_cycle: int = -1
    end_cycle: int = -1
    old_frame: int = -1
    new_frame: int = -1
    packets_total: int = 0
    packets_sent: int = 0
    packets_delivered: int = 0

    @property
    def latency(self) -> int:
        return self.end_cycle - self.start_cycle


@dataclass
class DmaStepResult:
    emitted: list[Packet] = field(default_factory=list)
    completed: list[MigrationRequest] = field(default_factory=list)


class MigrationManager:
    """
    Migration queue, migration DMA and the page-table update that finishes a migration.

    A request leaves the FIFO queue when a DMA channel is free. The DMA first claims a frame in
    the destination cube (aborting the migration if there is none). A read-write page is then
    locked and the DMA waits until no access to the old frame is outstanding; a read-only page
    stays accessible from its old frame throughout. The page data crosses the mesh as
    MIGRATION_DATA packets; when the last one arrives the destination cube sends a
    MIGRATION_ACK to the migration management cube, which records the latency and updates the
    page table after the OS interrupt delay. The old frame returns to the allocator once its
    outstanding accesses have drained.
    """

    def __init__(
        self,
        page_table: PageTable,
        network: MeshNetwork,
        mesh: MeshConfig,
        paging: PagingConfig,
        mms_cube: int = 0,
        log_events: bool = False,
    ) -> None:
        self.page_table = page_table
        self.allocator = page_table.allocator
        self.network = network
        self.mesh = mesh
        self.config = paging
        self.mms_cube = mms_cube
        self.packets_per_page = max(1, paging.page_size * 8 // mesh.data_bits)

        self.queue: deque[MigrationRequest] = deque()
        self.active: list[MigrationRequest] = []
        self.awaiting: dict[int, MigrationRequest] = {}
        self._updates: list[tuple[int, int, MigrationRequest]] = []
        self._draining: list[tuple[int, int]] = []
        self._in_flight: dict[int, MigrationRequest] = {}
        self._ids = itertools.count()

        self.requested = 0
        self.dropped_full = 0
        self.dropped_in_flight = 0
        self.dropped_noop = 0
        self.aborted = 0
        self.completed = 0
        self.latencies: list[int] = []
        self.migrated_pages: set[int] = set()
        self.bits_moved = 0
        self.queue_accesses = 0
        self.dma_accesses = 0
        self.log_events = log_events
        self.events: list[tuple[int, int, int, str, int, int, bool]] = []

    def in_flight(self, page: int) -> bool:
        return page in self._in_flight

    def request_of(self, page: int) -> MigrationRequest | None:
        return self._in_flight.get(page)

    @property
    def claimed_frames(self) -> int:
        """
        Frames held by migrations: claimed destination frames not yet mapped plus old frames
        still draining.
        """
        pending = sum(
            1 for r in self._in_flight.values() if r.new_frame >= 0
        )
        return pending + len(self._draining)

    def idle(self) -> bool:
        return not (self.queue or self._in_flight or self._draining)

    def request_migration(
        self, page: int, dst_cube: int, cycle: int = 0
    ) -> MigrationOutcome:
        """
        Queue a migration of `page` to `dst_cube`.

        Raises:
            InvalidPage: If the page is not mapped
        """
        entry = self.page_table.lookup(page)
        if entry is None:
            raise InvalidPage(page)
        self.requested += 1

        src_cube = self.page_table.host_cube(page)
        if dst_cube == src_cube:
            self.dropped_noop += 1
            return MigrationOutcome.DROPPED_NOOP
        if page in self._in_flight:
            self.dropped_in_flight += 1
            return MigrationOutcome.DROPPED_IN_FLIGHT
        if len(self.queue) >= self.config.migration_queue:
            self.dropped_full += 1
            return MigrationOutcome.DROPPED_FULL

        mode = (
            MigrationMode.BLOCKING
            if entry.permission == Permission.READ_WRITE
            else MigrationMode.NON_BLOCKING
        )
        request = MigrationRequest(
            next(self._ids), page, src_cube, dst_cube, mode, request_cycle=cycle
        )
        self.queue.append(request)
        self._in_flight[page] = request
        self.queue_accesses += 1
        return MigrationOutcome.QUEUED

    def _start(self, request: MigrationRequest, cycle: int) -> None:
        self.queue_accesses += 1
        request.start_cycle = cycle
        entry = self.page_table.entries[request.page]
        request.old_frame = entry.frame
        # the page may have moved under a re-layout since it was queued
        request.src_cube = self.page_table.host_cube(request.page)
        frame = self.allocator.claim_in_cube(request.dst_cube, page_process(request.page))
        if frame is None or request.src_cube == request.dst_cube:
            if frame is not None:
                self.allocator.release(frame, page_process(request.page))
            request.state = MigrationState.ABORTED
            request.end_cycle = cycle
            self.aborted += 1
            del self._in_flight[request.page]
            self._log(request, aborted=True)
            logging.warning(
                "migration of page %#x to cube %s aborted at cycle %s",
                request.page,
                request.dst_cube,
                cycle,
            )
            return

        request.new_frame = frame
        request.packets_total = self.packets_per_page
        if request.mode == MigrationMode.BLOCKING:
            entry.locked = True
            request.state = MigrationState.DRAINING
        else:
            request.state = MigrationState.DMA_ACTIVE
        self.active.append(request)

    def step_dma(self, cycle: int) -> DmaStepResult:
        """
        Advance the DMA by one cycle: finish due page-table updates, release drained frames,
        admit queued requests to free channels and emit one data packet per active migration.
        """
        result = DmaStepResult()

        while self._updates and self._updates[0][0] <= cycle:
            _, _, request = heapq.heappop(self._updates)
            self._finish(request)
            result.completed.append(request)

        if self._draining:
            still: list[tuple[int, int]] = []
            for frame, pid in self._draining:
                if self.page_table.outstanding[frame] > 0:
                    still.append((frame, pid))
                else:
                    self.allocator.release(frame, pid)
            self._draining = still

        while self.queue and len(self.active) < self.config.dma_channels:
            self._start(self.queue.popleft(), cycle)

        for request in list(self.active):
            if request.state == MigrationState.DRAINING:
                if self.page_table.outstanding[request.old_frame] > 0:
                    continue
                request.state = MigrationState.DMA_ACTIVE

            packet = Packet(
                PacketKind.MIGRATION_DATA,
                request.src_cube,
                request.dst_cube,
                self.mesh.data_bits,
                tag=request.migration_id,
            )
            self.network.inject(packet, cycle)
            self.dma_accesses += 1
            self.bits_moved += self.mesh.data_bits
            result.emitted.append(packet)
            request.packets_sent += 1
            if request.packets_sent == request.packets_total:
                request.state = MigrationState.AWAITING_ACK
                self.active.remove(request)
                self.awaiting[request.migration_id] = request

        return result

    def on_delivery(self, packet: Packet, cycle: int) -> Packet | None:
        """
        Handle a delivered migration packet.

        Returns:
            Packet | None: The MIGRATION_ACK injected when the last data packet arrived
        """
        request = self.awaiting.get(packet.tag)  # type: ignore
        if request is None:
            request = next(
                (r for r in self.active if r.migration_id == packet.tag), None
            )
        if request is None:
            return None

        if packet.kind == PacketKind.MIGRATION_DATA:
            request.packets_delivered += 1
            if request.packets_delivered == request.packets_total:
                ack = Packet(
                    PacketKind.MIGRATION_ACK,
                    request.dst_cube,
                    self.mms_cube,
                    self.mesh.header_bits,
                    tag=request.migration_id,
                )
                return self.network.inject(ack, cycle)
            return None

        if packet.kind == PacketKind.MIGRATION_ACK:
            del self.awaiting[request.migration_id]
            request.end_cycle = cycle
            request.state = MigrationState.UPDATING
            self.latencies.append(request.latency)
            heapq.heappush(
                self._updates,
                (cycle + self.config.os_interrupt_cycles, request.migration_id, request),
            )
        return None

    def _finish(self, request: MigrationRequest) -> None:
        entry = self.page_table.entries[request.page]
        old = self.page_table.remap(request.page, request.new_frame)
        entry.locked = False
        request.state = MigrationState.COMPLETE
        del self._in_flight[request.page]
        self.completed += 1
        self.migrated_pages.add(request.page)
        self._draining.append((old, page_process(request.page)))
        self._log(request, aborted=False)

    def _log(self, request: MigrationRequest, aborted: bool) -> None:
        if self.log_events:
            self.events.append(
                (
                    request.page,
                    request.src_cube,
                    request.dst_cube,
                    request.mode.value,
                    request.start_cycle,
                    request.end_cycle,
                    aborted,
                )
            )
