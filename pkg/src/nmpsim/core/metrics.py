from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Sequence

from pydantic import BaseModel, Field

# femtojoules per event
NETWORK_FJ_PER_BIT_HOP = 5_000
MEMORY_FJ_PER_BIT = 12_000
PAGE_INFO_FJ = 50_000
NMP_BUFFER_FJ = 122_000
MIGRATION_QUEUE_FJ = 26_890
MDMA_BUFFER_FJ = 106_200
WEIGHT_MATRIX_FJ = 244_000
REPLAY_BUFFER_FJ = 2_300_000
STATE_BUFFER_FJ = 106_000

FJ_PER_NJ = 1_000_000


@dataclass
class EventTally:
    """
    Event counts of a run that carry an energy cost.
    """

    network_bit_hops: int = 0
    memory_bits: int = 0
    page_info_accesses: int = 0
    nmp_buffer_accesses: int = 0
    migration_queue_accesses: int = 0
    mdma_accesses: int = 0
    weight_accesses: int = 0
    replay_accesses: int = 0
    state_accesses: int = 0

    def __add__(self, other: EventTally) -> EventTally:
        return EventTally(
            *(getattr(self, f.name) + getattr(other, f.name) for f in fields(self))
        )


class EnergyBreakdown(BaseModel):
    """
    Energy per component in nanojoules; `total_nj` is the sum of all components.
    """

    network_nj: float = 0.0
    memory_nj: float = 0.0
    page_info_nj: float = 0.0
    nmp_buffer_nj: float = 0.0
    migration_queue_nj: float = 0.0
    mdma_nj: float = 0.0
    weight_matrix_nj: float = 0.0
    replay_buffer_nj: float = 0.0
    state_buffer_nj: float = 0.0
    total_nj: float = 0.0


def compute_energy(tally: EventTally) -> EnergyBreakdown:
    femtojoules = {
        "network_nj": tally.network_bit_hops * NETWORK_FJ_PER_BIT_HOP,
        "memory_nj": tally.memory_bits * MEMORY_FJ_PER_BIT,
        "page_info_nj": tally.page_info_accesses * PAGE_INFO_FJ,
        "nmp_buffer_nj": tally.nmp_buffer_accesses * NMP_BUFFER_FJ,
        "migration_queue_nj": tally.migration_queue_accesses * MIGRATION_QUEUE_FJ,
        "mdma_nj": tally.mdma_accesses * MDMA_BUFFER_FJ,
        "weight_matrix_nj": tally.weight_accesses * WEIGHT_MATRIX_FJ,
        "replay_buffer_nj": tally.replay_accesses * REPLAY_BUFFER_FJ,
        "state_buffer_nj": tally.state_accesses * STATE_BUFFER_FJ,
    }
    components = {k: v / FJ_PER_NJ for k, v in femtojoules.items()}
    total = 0.0
    for value in components.values():
        total += value
    return EnergyBreakdown(**components, total_nj=total)


def compute_utilization(per_cube_completions: Sequence[int]) -> float | None:
    """
    Balance of NMP work over the cubes: `sum(c) / (N * max(c))`, 1.0 when perfectly even.

    Returns None when no cube completed anything.
    """
    if not per_cube_completions:
        return None
    peak = max(per_cube_completions)
    if peak == 0:
        return None
    return sum(per_cube_completions) / (len(per_cube_completions) * peak)


class IntervalRecord(BaseModel):
    interval: int
    start_cycle: int
    cycles: int
    ops: int
    opc: float
    avg_hops: float
    per_cube_completions: list[int]
    row_hit_rate: float


class RepeatSummary(BaseModel):
    repeat: int
    total_cycles: int
    ops_completed: int
    opc: float
    avg_hops: float
    migrations: int


class MigrationStats(BaseModel):
    requested: int = 0
    completed: int = 0
    dropped_full: int = 0
    dropped_in_flight: int = 0
    dropped_noop: int = 0
    aborted: int = 0
    mean_latency: float | None = None
    pages_migrated_fraction: float = 0.0
    accesses_to_migrated_fraction: float = 0.0


class MetricsReport(BaseModel):
    """
    Results of a run: the final repeat in full plus one summary per repeat.

    Contains no timestamps so identical runs serialize to identical bytes.
    """

    run_id: str
    technique: str
    remapper: str
    seed: int
    total_cycles: int
    ops_completed: int
    opc: float
    avg_hops: float
    timeline: list[IntervalRecord] = Field(default_factory=list)
    per_cube_completions: list[int] = Field(default_factory=list)
    host_completions: int = 0
    compute_utilization: float | None = None
    per_cube_row_hit_rate: list[float] = Field(default_factory=list)
    row_hit_rate: float = 0.0
    migrations: MigrationStats = MigrationStats()
    energy: EnergyBreakdown = EnergyBreakdown()
    per_repeat: list[RepeatSummary] = Field(default_factory=list)

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)

    @classmethod
    def from_json(cls, data: str) -> MetricsReport:
        return cls.model_validate_json(data)


def speedup(report: MetricsReport, baseline: MetricsReport) -> float:
    return baseline.total_cycles / report.total_cycles


def format_speedup(value: float) -> str:
    return f"{value:.2f}x"
