from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Iterable

import numpy as np

from .exceptions import InvalidParameter, TraceParseError

ELEMENT_BYTES = 8
DEFAULT_PAGE_SIZE = 4096
PROCESS_BASE = 0x1000_0000

# virtual page numbers stay below 2**36 for 48-bit addresses
PAGE_ID_SHIFT = 40


class OpKind(StrEnum):
    """
    Reduction operator of an NMP-op, applied as `dest += src1 OP src2`.
    """

    ADD = "ADD"
    MAC = "MAC"
    MIN = "MIN"
    MAX = "MAX"


# kinds that may omit src2
SINGLE_SOURCE_KINDS = frozenset({OpKind.ADD, OpKind.MIN, OpKind.MAX})


class KernelKind(StrEnum):
    MAC = "MAC"
    RD = "RD"
    SPMV_LIKE = "SPMV_LIKE"
    PR_LIKE = "PR_LIKE"
    BP_LIKE = "BP_LIKE"
    KM_LIKE = "KM_LIKE"


def page_id(process_id: int, vaddr: int, page_size: int) -> int:
    """
    Global identifier of the virtual page holding `vaddr` in the given process.
    """
    return (process_id << PAGE_ID_SHIFT) | (vaddr // page_size)


def page_process(page: int) -> int:
    return page >> PAGE_ID_SHIFT


def page_vpage(page: int) -> int:
    return page & ((1 << PAGE_ID_SHIFT) - 1)


@dataclass(frozen=True, slots=True)
class NmpOp:
    seq_id: int
    op_kind: OpKind
    dest_vaddr: int
    src1_vaddr: int
    src2_vaddr: int | None
    process_id: int

    def operands(self) -> tuple[int, ...]:
        """
        Operand addresses in dest, src1, src2 order (src2 omitted when absent).
        """
        if self.src2_vaddr is None:
            return (self.dest_vaddr, self.src1_vaddr)
        return (self.dest_vaddr, self.src1_vaddr, self.src2_vaddr)


@dataclass(frozen=True, slots=True)
class ProcessInfo:
    process_id: int
    base: int
    size: int

    def contains(self, vaddr: int) -> bool:
        return self.base <= vaddr < self.base + self.size


@dataclass(frozen=True, slots=True)
class Region:
    """
    A read-only address range `[start, end)` of one process.
    """

    process_id: int
    start: int
    end: int

    def overlaps_page(self, process_id: int, page_start: int, page_size: int) -> bool:
        if process_id != self.process_id:
            return False
        return page_start < self.end and self.start < page_start + page_size


@dataclass(frozen=True)
class OpTrace:
    """
    An ordered NMP-op trace with its page size, process extents and read-only regions.
    """

    ops: tuple[NmpOp, ...]
    page_size: int = DEFAULT_PAGE_SIZE
    processes: tuple[ProcessInfo, ...] = ()
    read_only: tuple[Region, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.ops)

    def process(self, process_id: int) -> ProcessInfo | None:
        for info in self.processes:
            if info.process_id == process_id:
                return info
        return None

    def pages(self, op: NmpOp) -> list[int]:
        """
        Distinct pages touched by an op, in operand order.
        """
        pages: list[int] = []
        for vaddr in op.operands():
            page = page_id(op.process_id, vaddr, self.page_size)
            if page not in pages:
                pages.append(page)
        return pages

    def is_read_only(self, process_id: int, vaddr: int) -> bool:
        page_start = vaddr - vaddr % self.page_size
        return any(
            r.overlaps_page(process_id, page_start, self.page_size)
            for r in self.read_only
        )

    def with_process_id(self, process_id: int) -> OpTrace:
        """
        Copy of a single-process trace re-labelled to another process id.
        """
        ops = tuple(
            NmpOp(
                o.seq_id,
                o.op_kind,
                o.dest_vaddr,
                o.src1_vaddr,
                o.src2_vaddr,
                process_id,
            )
            for o in self.ops
        )
        processes = tuple(
            ProcessInfo(process_id, p.base, p.size) for p in self.processes
        )
        regions = tuple(Region(process_id, r.start, r.end) for r in self.read_only)
        return OpTrace(ops, self.page_size, processes, regions)


# -----------------------------------------------------------------------------
# Generators
# -----------------------------------------------------------------------------
class _Layout:
    """
    Lays out page-aligned, disjoint vectors of one process with a guard page between them.
    """

    def __init__(self, process_id: int, page_size: int, base: int = PROCESS_BASE):
        self.process_id = process_id
        self.page_size = page_size
        self.base = base
        self.cursor = base
        self.read_only: list[Region] = []

    def vector(self, elements: int, read_only: bool = False) -> int:
        start = self.cursor
        size = -(-(elements * ELEMENT_BYTES) // self.page_size) * self.page_size
        self.cursor += size + self.page_size
        if read_only:
            self.read_only.append(Region(self.process_id, start, start + size))
        return start

    def trace(self, ops: list[NmpOp]) -> OpTrace:
        process = ProcessInfo(self.process_id, self.base, self.cursor - self.base)
        return OpTrace(tuple(ops), self.page_size, (process,), tuple(self.read_only))


def _mac(layout: _Layout, n: int, rng: np.random.Generator) -> list[NmpOp]:
    dest = layout.vector(n)
    a = layout.vector(n, read_only=True)
    b = layout.vector(n, read_only=True)
    pid = layout.process_id
    return [
        NmpOp(i, OpKind.MAC, dest + 8 * i, a + 8 * i, b + 8 * i, pid) for i in range(n)
    ]


def _rd(layout: _Layout, n: int, rng: np.random.Generator) -> list[NmpOp]:
    x = layout.vector(n)
    acc = layout.vector(1)
    pid = layout.process_id
    ops: list[NmpOp] = []
    active = list(range(n))
    while len(active) > 2:
        survivors: list[int] = []
        for k in range(0, len(active) - 1, 2):
            left, right = active[k], active[k + 1]
            ops.append(
                NmpOp(len(ops), OpKind.ADD, x + 8 * left, x + 8 * right, None, pid)
            )
            survivors.append(left)
        if len(active) % 2:
            survivors.append(active[-1])
        active = survivors

    # the root folds the last partial sums into the accumulator
    if len(active) == 2:
        root = NmpOp(
            len(ops), OpKind.ADD, acc, x + 8 * active[0], x + 8 * active[1], pid
        )
    else:
        root = NmpOp(len(ops), OpKind.ADD, acc, x + 8 * active[0], None, pid)
    ops.append(root)
    return ops


def _spmv(
    layout: _Layout,
    n: int,
    rng: np.random.Generator,
    exponent: float,
    x_pages: int,
) -> list[NmpOp]:
    per_row = 8
    per_page = layout.page_size // ELEMENT_BYTES
    rows = max(1, -(-n // per_row))
    y = layout.vector(rows)
    values = layout.vector(n, read_only=True)
    x = layout.vector(x_pages * per_page, read_only=True)

    ranks = np.arange(1, x_pages + 1, dtype=np.float64)
    weights = ranks**-exponent
    col_pages = rng.choice(x_pages, size=n, p=weights / weights.sum())
    col_offsets = rng.integers(0, per_page, size=n)

    pid = layout.process_id
    return [
        NmpOp(
            k,
            OpKind.MAC,
            y + 8 * (k // per_row),
            values + 8 * k,
            x + 8 * (int(col_pages[k]) * per_page + int(col_offsets[k])),
            pid,
        )
        for k in range(n)
    ]


def _pr(layout: _Layout, n: int, rng: np.random.Generator) -> list[NmpOp]:
    degree = 4
    vertices = max(4 * n, degree)
    rank_new = layout.vector(-(-n // degree))
    rank_old = layout.vector(vertices, read_only=True)
    inv_degree = layout.vector(vertices, read_only=True)
    sources = rng.integers(0, vertices, size=n)
    pid = layout.process_id
    return [
        NmpOp(
            k,
            OpKind.MAC,
            rank_new + 8 * (k // degree),
            rank_old + 8 * int(sources[k]),
            inv_degree + 8 * int(sources[k]),
            pid,
        )
        for k in range(n)
    ]


def _bp(layout: _Layout, n: int, rng: np.random.Generator) -> list[NmpOp]:
    hidden = 16
    inputs = -(-n // hidden)
    weights = layout.vector(n)
    delta = layout.vector(hidden, read_only=True)
    activations = layout.vector(inputs, read_only=True)
    pid = layout.process_id
    return [
        NmpOp(
            k,
            OpKind.MAC,
            weights + 8 * k,
            delta + 8 * (k % hidden),
            activations + 8 * (k // hidden),
            pid,
        )
        for k in range(n)
    ]


def _km(layout: _Layout, n: int, rng: np.random.Generator) -> list[NmpOp]:
    dims, clusters = 8, 4
    points = -(-n // dims)
    sums = layout.vector(clusters * dims)
    coords = layout.vector(points * dims, read_only=True)
    membership = rng.integers(0, clusters, size=points)
    pid = layout.process_id
    ops: list[NmpOp] = []
    for k in range(n):
        p, d = divmod(k, dims)
        c = int(membership[p])
        ops.append(
            NmpOp(k, OpKind.ADD, sums + 8 * (c * dims + d), coords + 8 * k, None, pid)
        )
    return ops


def generate_kernel_trace(
    kind: KernelKind | str,
    n: int,
    seed: int = 0,
    *,
    process_id: int = 0,
    page_size: int = DEFAULT_PAGE_SIZE,
    exponent: float = 1.2,
    x_pages: int = 64,
) -> OpTrace:
    """
    Generate a synthetic kernel trace.

    MAC walks three disjoint sequential vectors; RD builds a pairwise reduction tree over one
    vector whose root writes a separate accumulator page; SPMV_LIKE draws the x-vector page of
    every nonzero from a bounded power law with the given exponent; PR_LIKE scatters over four
    times as many vertices as edges (many pages, little reuse); BP_LIKE sweeps a large weight
    matrix against two small vectors; KM_LIKE accumulates points into a handful of centroid pages.

    Args:
        kind: Kernel to generate
        n: Element count (ops for every kind except RD, which emits n - 1 ops)
        seed: Seed of the generator; identical arguments give identical traces
        process_id: Process id stamped on every op
        page_size: Page size in bytes, a power of two
        exponent: Power-law exponent of SPMV_LIKE column pages
        x_pages: Number of x-vector pages of SPMV_LIKE

    Raises:
        InvalidParameter: If a size is zero or negative
    """
    kind = KernelKind(kind)
    if n <= 0:
        raise InvalidParameter("n", n)
    if page_size <= 0 or page_size & (page_size - 1):
        raise InvalidParameter("page_size", page_size, "must be a power of two")
    if x_pages <= 0:
        raise InvalidParameter("x_pages", x_pages)

    rng = np.random.default_rng(seed)
    layout = _Layout(process_id, page_size)
    match kind:
        case KernelKind.MAC:
            ops = _mac(layout, n, rng)
        case KernelKind.RD:
            ops = _rd(layout, n, rng)
        case KernelKind.SPMV_LIKE:
            ops = _spmv(layout, n, rng, exponent, x_pages)
        case KernelKind.PR_LIKE:
            ops = _pr(layout, n, rng)
        case KernelKind.BP_LIKE:
            ops = _bp(layout, n, rng)
        case KernelKind.KM_LIKE:
            ops = _km(layout, n, rng)

    logging.info("generated %s trace with %s ops (seed %s)", kind, len(ops), seed)
    return layout.trace(ops)


def merge_traces(traces: Iterable[OpTrace]) -> OpTrace:
    """
    Interleave per-process traces round-robin by issue slot.

    Slot k takes the next op of process k mod P, skipping processes that ran out of ops.
    Sequence ids are renumbered to the merged order.
    """
    traces = list(traces)
    if not traces:
        return OpTrace(())
    page_size = traces[0].page_size
    cursors = [0] * len(traces)
    merged: list[NmpOp] = []
    remaining = sum(len(t) for t in traces)
    slot = 0
    while remaining:
        index = slot % len(traces)
        slot += 1
        trace = traces[index]
        if cursors[index] >= len(trace):
            continue
        op = trace.ops[cursors[index]]
        cursors[index] += 1
        remaining -= 1
        merged.append(
            NmpOp(
                len(merged),
                op.op_kind,
                op.dest_vaddr,
                op.src1_vaddr,
                op.src2_vaddr,
                op.process_id,
            )
        )
    processes = tuple(p for t in traces for p in t.processes)
    regions = tuple(r for t in traces for r in t.read_only)
    return OpTrace(tuple(merged), page_size, processes, regions)


# -----------------------------------------------------------------------------
# Text format
# -----------------------------------------------------------------------------
def serialize_trace(trace: OpTrace) -> bytes:
    """
    Serialize a trace to its UTF-8 line format.

    The header carries the page size, one `!process=` line per process and one
    `!readonly=` line per read-only region, followed by one line per op:
    `seq_id OP_KIND dest_hex src1_hex [src2_hex] pid`.
    """
    lines = [f"!page_size={trace.page_size}"]
    for p in trace.processes:
        lines.append(f"!process={p.process_id},{p.base:#x},{p.size:#x}")
    for r in trace.read_only:
        lines.append(f"!readonly={r.process_id},{r.start:#x},{r.end:#x}")
    for op in trace.ops:
        fields = [str(op.seq_id), op.op_kind.value, f"{op.dest_vaddr:#x}"]
        fields.append(f"{op.src1_vaddr:#x}")
        if op.src2_vaddr is not None:
            fields.append(f"{op.src2_vaddr:#x}")
        fields.append(str(op.process_id))
        lines.append(" ".join(fields))
    return ("\n".join(lines) + "\n").encode("utf-8")


def _int(token: str, line_no: int, what: str) -> int:
    try:
        return int(token, 0)
    except ValueError:
        raise TraceParseError(line_no, f"{what} {token!r} is not an integer")


def _header(key: str, value: str, line_no: int) -> tuple[str, tuple[int, ...]]:
    parts = value.split(",")
    match key:
        case "page_size":
            size = _int(value, line_no, "page size")
            if size <= 0 or size & (size - 1):
                raise TraceParseError(line_no, "page size must be a power of two")
            return key, (size,)
        case "process" | "readonly":
            if len(parts) != 3:
                raise TraceParseError(line_no, f"{key} expects three fields")
            return key, tuple(_int(p, line_no, key) for p in parts)
        case _:
            raise TraceParseError(line_no, f"unknown header {key!r}")


def _infer_processes(ops: list[NmpOp], page_size: int) -> tuple[ProcessInfo, ...]:
    bounds: dict[int, tuple[int, int]] = {}
    for op in ops:
        lo, hi = min(op.operands()), max(op.operands())
        old = bounds.get(op.process_id, (lo, hi))
        bounds[op.process_id] = (min(old[0], lo), max(old[1], hi))
    processes = []
    for pid in sorted(bounds):
        lo, hi = bounds[pid]
        base = lo - lo % page_size
        end = hi - hi % page_size + page_size
        processes.append(ProcessInfo(pid, base, end - base))
    return tuple(processes)


def parse_trace(text: bytes | str) -> OpTrace:
    """
    Parse the trace line format.

    Raises:
        TraceParseError: On the first malformed line, carrying its line number
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise TraceParseError(0, f"not UTF-8: {e}")

    page_size = DEFAULT_PAGE_SIZE
    processes: list[ProcessInfo] = []
    regions: list[Region] = []
    ops: list[NmpOp] = []
    op_lines: list[int] = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue

        if line.startswith("!"):
            key, sep, value = line[1:].partition("=")
            if not sep:
                raise TraceParseError(line_no, "header needs key=value")
            key, values = _header(key.strip(), value.strip(), line_no)
            match key:
                case "page_size":
                    page_size = values[0]
                case "process":
                    processes.append(ProcessInfo(*values))
                case "readonly":
                    regions.append(Region(*values))
            continue

        tokens = line.split()
        if len(tokens) not in (5, 6):
            raise TraceParseError(line_no, f"expected 5 or 6 fields, got {len(tokens)}")
        try:
            kind = OpKind(tokens[1])
        except ValueError:
            raise TraceParseError(line_no, f"unknown op kind {tokens[1]!r}")
        if len(tokens) == 5 and kind not in SINGLE_SOURCE_KINDS:
            raise TraceParseError(line_no, f"{kind} requires src2")

        seq_id = _int(tokens[0], line_no, "seq_id")
        dest = _int(tokens[2], line_no, "dest")
        src1 = _int(tokens[3], line_no, "src1")
        src2 = _int(tokens[4], line_no, "src2") if len(tokens) == 6 else None
        pid = _int(tokens[-1], line_no, "pid")
        if ops and seq_id <= ops[-1].seq_id:
            raise TraceParseError(line_no, "seq_id must be strictly increasing")
        ops.append(NmpOp(seq_id, kind, dest, src1, src2, pid))
        op_lines.append(line_no)

    if processes:
        declared = {p.process_id: p for p in processes}
        for op, line_no in zip(ops, op_lines):
            info = declared.get(op.process_id)
            if info is None:
                raise TraceParseError(line_no, f"undeclared process {op.process_id}")
            if not all(info.contains(a) for a in op.operands()):
                raise TraceParseError(line_no, "address outside the process extent")
        process_table = tuple(processes)
    else:
        process_table = _infer_processes(ops, page_size)

    return OpTrace(tuple(ops), page_size, process_table, tuple(regions))
