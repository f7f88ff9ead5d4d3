from __future__ import annotations

import itertools
from abc import ABC, abstractmethod
from collections import Counter, OrderedDict, deque
from dataclasses import dataclass, field
from enum import StrEnum

from .config import ControllerConfig, Technique
from .trace import NmpOp


class Role(StrEnum):
    DEST = "DEST"
    SRC1 = "SRC1"
    SRC2 = "SRC2"


class TouchKind(StrEnum):
    ACCESS = "ACCESS"
    HOPS = "HOPS"
    LATENCY = "LATENCY"
    MIGRATION = "MIGRATION"
    ACTION = "ACTION"


_insertion = itertools.count()


@dataclass
class PageInfoEntry:
    """
    Per-page record kept in a controller's page information cache.

    Histories are rings of the last `history_length` values, oldest first.
    """

    page: int
    history_length: int = 4
    access_count: int = 0
    migration_count: int = 0
    hop_history: deque[int] = field(init=False)
    latency_history: deque[int] = field(init=False)
    migration_latency_history: deque[int] = field(init=False)
    action_history: deque[int] = field(init=False)
    last_compute_cube: int | None = None
    last_src1_cube: int | None = None
    inserted: int = field(default_factory=lambda: next(_insertion))

    def __post_init__(self) -> None:
        h = self.history_length
        self.hop_history = deque(maxlen=h)
        self.latency_history = deque(maxlen=h)
        self.migration_latency_history = deque(maxlen=h)
        self.action_history = deque(maxlen=h)

    @property
    def migrations_per_access(self) -> float:
        if self.access_count == 0:
            return 0.0
        return self.migration_count / self.access_count

    def touch(self, kind: TouchKind, value: int = 0) -> None:
        match kind:
            case TouchKind.ACCESS:
                self.access_count += 1
            case TouchKind.HOPS:
                self.hop_history.append(value)
            case TouchKind.LATENCY:
                self.latency_history.append(value)
            case TouchKind.MIGRATION:
                self.migration_count += 1
                self.migration_latency_history.append(value)
            case TouchKind.ACTION:
                self.action_history.append(value)


class PageInfoCache:
    """
    Fully associative page information cache of one memory controller.

    When full, the least frequently accessed entry (oldest on ties) is evicted and its content
    is lost.
    """

    def __init__(self, capacity: int, history_length: int = 4) -> None:
        self.capacity = capacity
        self.history_length = history_length
        self.entries: dict[int, PageInfoEntry] = {}
        self.evictions = 0
        self.accesses = 0

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, page: int) -> PageInfoEntry | None:
        return self.entries.get(page)

    def victim(self) -> PageInfoEntry:
        return min(self.entries.values(), key=lambda e: (e.access_count, e.inserted))

    def entry(self, page: int) -> PageInfoEntry:
        self.accesses += 1
        found = self.entries.get(page)
        if found is not None:
            return found
        if len(self.entries) >= self.capacity:
            del self.entries[self.victim().page]
            self.evictions += 1
        created = PageInfoEntry(page, self.history_length)
        self.entries[page] = created
        return created

    def touch(self, page: int, kind: TouchKind, value: int = 0) -> PageInfoEntry:
        found = self.entry(page)
        found.touch(kind, value)
        return found


def page_info_touch(
    cache: PageInfoCache, page: int, kind: TouchKind, value: int = 0
) -> PageInfoEntry:
    return cache.touch(page, kind, value)


def select_candidate_page(
    caches: list[PageInfoCache], cursor: int
) -> tuple[PageInfoEntry | None, int]:
    """
    Candidate page of the round-robin controller turn.

    Starting at `cursor`, the first controller with a non-empty cache provides its most
    accessed page (lowest page id on ties).

    Returns:
        tuple[PageInfoEntry | None, int]: The candidate (None if every cache is empty) and the
            cursor of the next turn
    """
    count = len(caches)
    for k in range(count):
        mc = (cursor + k) % count
        cache = caches[mc]
        if cache.entries:
            best = min(cache.entries.values(), key=lambda e: (-e.access_count, e.page))
            return best, (mc + 1) % count
    return None, cursor


class SystemCounters:
    """
    Exponentially decayed system information: per-cube NMP-table occupancy and row-buffer hit
    rate, and per-controller queue occupancy, all normalized to [0, 1].
    """

    def __init__(
        self,
        cubes: int,
        controllers: int,
        decay: float = 0.125,
        nmp_capacity: int = 512,
        mc_capacity: int = 64,
    ) -> None:
        self.decay = decay
        self.nmp_capacity = nmp_capacity
        self.mc_capacity = mc_capacity
        self.nmp_occupancy = [0.0] * cubes
        self.row_hit_rate = [0.0] * cubes
        self.mc_occupancy = [0.0] * controllers

    def _blend(self, old: list[float], new: list[float]) -> list[float]:
        d = self.decay
        return [(1.0 - d) * o + d * min(1.0, max(0.0, n)) for o, n in zip(old, new)]

    def update(
        self,
        nmp_occupancy: list[int],
        row_hit_rate: list[float | None],
        mc_occupancy: list[int],
    ) -> None:
        """
        Blend in a sample of raw table and queue occupancies and window hit rates. Cubes without
        DRAM accesses in the window (hit rate None) keep their previous hit rate.
        """
        self.nmp_occupancy = self._blend(
            self.nmp_occupancy, [n / self.nmp_capacity for n in nmp_occupancy]
        )
        self.row_hit_rate = self._blend(
            self.row_hit_rate,
            [old if new is None else new for old, new in zip(self.row_hit_rate, row_hit_rate)],
        )
        self.mc_occupancy = self._blend(
            self.mc_occupancy, [n / self.mc_capacity for n in mc_occupancy]
        )


class ComputeRemapTable:
    """
    Bounded page to compute-cube table; the oldest entry is dropped when full.
    """

    def __init__(self, capacity: int) -> None:
        self.capacity = capacity
        self._table: OrderedDict[int, int] = OrderedDict()

    def __len__(self) -> int:
        return len(self._table)

    def __contains__(self, page: int) -> bool:
        return page in self._table

    def set(self, page: int, cube: int) -> None:
        if page in self._table:
            del self._table[page]
        elif len(self._table) >= self.capacity:
            self._table.popitem(last=False)
        self._table[page] = cube

    def lookup(self, page: int) -> int | None:
        return self._table.get(page)

    def clear(self) -> None:
        self._table.clear()


class HostCache:
    """
    Set-associative LRU cache of one core with its miss status holding registers.
    """

    def __init__(self, size_bytes: int, line_bytes: int, ways: int, mshr_entries: int) -> None:
        self.line_bytes = line_bytes
        self.ways = ways
        self.set_count = max(1, size_bytes // (line_bytes * ways))
        self.sets: list[OrderedDict[int, None]] = [
            OrderedDict() for _ in range(self.set_count)
        ]
        self.mshr_entries = mshr_entries
        self.mshr: Counter[int] = Counter()
        self.hits = 0
        self.misses = 0

    def line(self, address: int) -> int:
        return address // self.line_bytes

    def _set(self, line: int) -> OrderedDict[int, None]:
        return self.sets[line % self.set_count]

    def probe(self, address: int) -> bool:
        line = self.line(address)
        return line in self._set(line)

    def access(self, address: int) -> bool:
        """
        Look up `address` and refresh its LRU position on a hit.
        """
        line = self.line(address)
        lines = self._set(line)
        if line in lines:
            lines.move_to_end(line)
            self.hits += 1
            return True
        self.misses += 1
        return False

    def fill(self, address: int) -> None:
        line = self.line(address)
        lines = self._set(line)
        if line in lines:
            lines.move_to_end(line)
            return
        if len(lines) >= self.ways:
            lines.popitem(last=False)
        lines[line] = None

    def mshr_free(self) -> int:
        return self.mshr_entries - len(self.mshr)

    def allocate_mshr(self, address: int) -> bool:
        line = self.line(address)
        if line not in self.mshr and len(self.mshr) >= self.mshr_entries:
            return False
        self.mshr[line] += 1
        return True

    def release_mshr(self, address: int) -> None:
        """
        Drop one waiting operand of the line; the entry frees once none is left.
        """
        line = self.line(address)
        if line not in self.mshr:
            return
        self.mshr[line] -= 1
        if self.mshr[line] <= 0:
            del self.mshr[line]


def host_address(op: NmpOp, vaddr: int) -> int:
    """
    Cache key of an operand: caches are virtually tagged per process.
    """
    return (op.process_id << 48) | vaddr


def build_host_caches(config: ControllerConfig) -> list[HostCache]:
    return [
        HostCache(config.cache_bytes, config.cache_line, config.cache_ways, config.mshr_entries)
        for _ in range(config.cores)
    ]


@dataclass(frozen=True)
class ResolvedOp:
    """
    An op with its operands resolved to pages, physical addresses and host cubes.
    """

    op: NmpOp
    pages: dict[Role, int]
    paddrs: dict[Role, int]
    cubes: dict[Role, int]

    @property
    def roles(self) -> list[Role]:
        return list(self.pages)


@dataclass(frozen=True)
class SchedulePlan:
    """
    Where and how an op executes.

    Attributes:
        compute_cube: Cube whose NMP unit executes the op (-1 for host execution)
        fetch_roles: Source operands to request from remote cubes
        local_roles: Operands read from the compute cube's own DRAM
        result_to: Cube receiving the result for the destination update, if remote
        host_execute: The op runs on the host core
        host_fetch: Operands the host core fetches through the memory controller
    """

    compute_cube: int
    fetch_roles: tuple[Role, ...] = ()
    local_roles: tuple[Role, ...] = ()
    result_to: int | None = None
    host_execute: bool = False
    host_fetch: tuple[Role, ...] = ()


def plan_at(resolved: ResolvedOp, cube: int) -> SchedulePlan:
    """
    Plan executing `resolved` at `cube`: remote sources are fetched, the destination is
    updated in place when it lives at `cube` and receives the result otherwise.
    """
    fetch = tuple(
        r for r in resolved.roles if r != Role.DEST and resolved.cubes[r] != cube
    )
    local = tuple(r for r in resolved.roles if resolved.cubes[r] == cube)
    dest_cube = resolved.cubes[Role.DEST]
    return SchedulePlan(
        compute_cube=cube,
        fetch_roles=fetch,
        local_roles=local,
        result_to=None if dest_cube == cube else dest_cube,
    )


def remap_target(resolved: ResolvedOp, remap: ComputeRemapTable) -> int | None:
    for role in (Role.DEST, Role.SRC1, Role.SRC2):
        page = resolved.pages.get(role)
        if page is not None:
            cube = remap.lookup(page)
            if cube is not None:
                return cube
    return None


class NmpScheduler(ABC):
    """
    NMP-op scheduling policy of the memory controllers.

    A compute remap entry of any operand page (looked up dest, src1, src2) overrides the
    technique's own choice.
    """

    technique: Technique

    def schedule(self, resolved: ResolvedOp, remap: ComputeRemapTable) -> SchedulePlan:
        target = remap_target(resolved, remap)
        if target is not None:
            return plan_at(resolved, target)
        return self.default_plan(resolved)

    def default_plan(self, resolved: ResolvedOp) -> SchedulePlan:
        return plan_at(resolved, self.default_cube(resolved))

    @abstractmethod
    def default_cube(self, resolved: ResolvedOp) -> int:
        """
        Compute cube the technique picks without a remap entry.
        """

    def host_cache(self, op: NmpOp) -> HostCache | None:
        """
        Cache of the core that executes `op` on the host, for techniques that do so.
        """
        return None

    def on_complete(self, resolved: ResolvedOp, plan: SchedulePlan) -> None:
        """
        Hook run when the controller receives the op's ACK.
        """


def schedule_op(
    resolved: ResolvedOp, scheduler: NmpScheduler, remap: ComputeRemapTable
) -> SchedulePlan:
    return scheduler.schedule(resolved, remap)
