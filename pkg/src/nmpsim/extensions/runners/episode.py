from __future__ import annotations

import logging
from dataclasses import dataclass, field

from ...core.agent import TrainingLogRow
from ...core.allocator import FrameAllocator, FramePool
from ...core.config import AllocationPolicy, RemapperKind, SimConfig, Technique
from ...core.exceptions import ConfigValidationError
from ...core.meta import RunMetaData, RunStatus
from ...core.metrics import (
    MetricsReport,
    RepeatSummary,
    compute_energy,
    compute_utilization,
)
from ...core.offload import NmpScheduler
from ...core.remapper import Remapper
from ...core.run_id import RunId
from ...core.simulation import EpisodeResult, Simulator
from ...core.trace import OpTrace
from ...core.workload import load_workload
from ..allocators import HoardAllocator, RoundRobinAllocator
from ..remappers import AimmRemapper, NoRemapper, TomRemapper
from ..resources import FolderResource
from ..schedulers import BnmpScheduler, LdbScheduler, PeiScheduler


def build_allocator(config: SimConfig, page_size: int) -> FrameAllocator:
    pool = FramePool(config.mesh.cubes, config.cube.capacity_bytes // page_size)
    match config.paging.policy:
        case AllocationPolicy.HOARD:
            return HoardAllocator(pool, config.paging.hoard_chunk_frames)
        case _:
            return RoundRobinAllocator(pool)


def build_scheduler(config: SimConfig) -> NmpScheduler:
    match config.technique:
        case Technique.LDB:
            return LdbScheduler()
        case Technique.PEI:
            return PeiScheduler.from_config(config.controller)
        case _:
            return BnmpScheduler()


def build_remapper(config: SimConfig, folder: FolderResource | None = None) -> Remapper:
    match config.remapper:
        case RemapperKind.TOM:
            return TomRemapper(config)
        case RemapperKind.AIMM:
            return AimmRemapper(config, folder)
        case _:
            return NoRemapper(config)


@dataclass
class SimulationRun:
    """
    Everything a run produced: the report plus the raw logs of its final repeat.
    """

    run_id: RunId
    report: MetricsReport
    final: EpisodeResult
    training_log: list[TrainingLogRow] = field(default_factory=list)


def build_report(
    config: SimConfig,
    run_id: RunId,
    final: EpisodeResult,
    summaries: list[RepeatSummary],
    remapper: Remapper,
) -> MetricsReport:
    return MetricsReport(
        run_id=run_id,
        technique=config.technique.value,
        remapper=config.remapper.value,
        seed=config.seed,
        total_cycles=final.total_cycles,
        ops_completed=final.ops_completed,
        opc=final.opc,
        avg_hops=final.avg_hops,
        timeline=final.timeline,
        per_cube_completions=final.per_cube_completions,
        host_completions=final.host_completions,
        compute_utilization=compute_utilization(final.per_cube_completions),
        per_cube_row_hit_rate=final.per_cube_row_hit_rate,
        row_hit_rate=final.row_hit_rate,
        migrations=final.migrations,
        energy=compute_energy(final.tally + remapper.tally()),
        per_repeat=summaries,
    )


def simulate(
    config: SimConfig,
    trace: OpTrace | None = None,
    meta: RunMetaData | None = None,
    checkpoint_folder: FolderResource | None = None,
) -> SimulationRun:
    """
    Replay the workload `config.repeats` times.

    Every repeat starts from a fresh simulator (page table, caches, counters, network); only the
    remapper, and with it the agent's network, is carried over.
    """
    run_id = RunId.build(config.technique, config.remapper, config.seed)
    meta = meta or RunMetaData(run_id=run_id)
    if trace is None:
        try:
            trace = load_workload(config)
        except Exception as e:
            meta.update_status(RunStatus.INITIALIZING_FAILED)
            meta.update_log(f"workload of {run_id} failed to load: {e}")
            raise
    meta.update_status(RunStatus.INITIALIZED)

    remapper = build_remapper(config, checkpoint_folder)
    summaries: list[RepeatSummary] = []
    final: EpisodeResult | None = None
    meta.update_status(RunStatus.RUNNING)
    try:
        for repeat in range(config.repeats):
            sim = Simulator(
                config,
                trace,
                build_scheduler(config),
                remapper,
                build_allocator(config, trace.page_size),
                repeat,
            )
            final = sim.run()
            summaries.append(
                RepeatSummary(
                    repeat=repeat,
                    total_cycles=final.total_cycles,
                    ops_completed=final.ops_completed,
                    opc=final.opc,
                    avg_hops=final.avg_hops,
                    migrations=final.migrations.completed,
                )
            )
            meta.repeats_done = repeat + 1
    except Exception as e:
        msg = f"run {run_id} failed: {e}"
        logging.exception(msg)
        meta.update_status(RunStatus.RUN_FAILED)
        meta.update_log(msg)
        raise
    finally:
        remapper.close()

    assert final is not None
    report = build_report(config, run_id, final, summaries, remapper)
    meta.update_status(RunStatus.COMPLETED)
    training_log = (
        list(remapper.agent.training_log) if isinstance(remapper, AimmRemapper) else []
    )
    return SimulationRun(run_id, report, final, training_log)


def run_simulation(config: SimConfig) -> MetricsReport:
    return simulate(config).report


def run_multiprogram(config: SimConfig) -> MetricsReport:
    """
    Run two or more traces concurrently, each as its own process.

    Raises:
        ConfigValidationError: If fewer than two traces are configured
    """
    if len(config.traces) < 2:
        raise ConfigValidationError("a multi-program run needs at least two traces")
    return run_simulation(config)
