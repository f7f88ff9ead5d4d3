from __future__ import annotations

import logging

import smart_open as so  # type: ignore

from .config import MAX_PROCESSES, SimConfig
from .exceptions import ConfigValidationError, TooManyProcesses
from .trace import OpTrace, generate_kernel_trace, merge_traces, parse_trace


def resolve_trace_spec(spec: str, page_size: int, process_id: int = 0) -> OpTrace:
    """
    Load `file:<path>` or generate `gen:<KIND>:<n>[:<seed>]`.
    """
    source, _, rest = spec.partition(":")
    match source:
        case "file":
            with so.open(rest, "rb") as f:
                trace = parse_trace(f.read())
            logging.info("read %s ops from %s", len(trace), rest)
            return trace
        case "gen":
            parts = rest.split(":")
            if len(parts) not in (2, 3):
                raise ConfigValidationError(f"bad generator spec {spec!r}")
            try:
                n = int(parts[1])
                seed = int(parts[2]) if len(parts) == 3 else 0
            except ValueError:
                raise ConfigValidationError(f"bad generator spec {spec!r}")
            return generate_kernel_trace(
                parts[0].upper(), n, seed, process_id=process_id, page_size=page_size
            )
        case _:
            raise ConfigValidationError(f"unknown trace source in {spec!r}")


def load_workload(config: SimConfig) -> OpTrace:
    """
    Resolve every trace spec of the configuration into one (interleaved) trace.

    Generated traces get process id `k` for the k-th spec; loaded traces whose single process
    id collides with an earlier one are relabelled.

    Raises:
        TooManyProcesses: For more than four processes unless the limit is lifted
    """
    if not config.traces:
        raise ConfigValidationError("no workload.trace given")

    traces: list[OpTrace] = []
    used: set[int] = set()
    for k, spec in enumerate(config.traces):
        trace = resolve_trace_spec(spec, config.paging.page_size, process_id=k)
        pids = {p.process_id for p in trace.processes}
        if pids & used:
            if len(pids) != 1:
                raise ConfigValidationError(f"process ids of {spec!r} collide")
            fresh = max(used) + 1
            trace = trace.with_process_id(fresh)
            pids = {fresh}
        used |= pids
        traces.append(trace)

    if len(used) > MAX_PROCESSES and not config.allow_many_processes:
        raise TooManyProcesses(len(used), MAX_PROCESSES)
    if len({t.page_size for t in traces}) > 1:
        raise ConfigValidationError("traces disagree on the page size")
    if traces[0].page_size != config.paging.page_size:
        raise ConfigValidationError("trace page size differs from paging.page_size")

    if len(traces) == 1:
        return traces[0]
    return merge_traces(traces)
