from __future__ import annotations

import logging
from enum import StrEnum
from typing import Any

import smart_open as so  # type: ignore
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .exceptions import ConfigValidationError

NMPSIM_LOG_LEVEL_ENV_KEY = "NMPSIM_LOG_LEVEL"

AGENT_INTERVALS = (100, 125, 167, 250)
MAX_PROCESSES = 4


class Technique(StrEnum):
    BNMP = "BNMP"
    LDB = "LDB"
    PEI = "PEI"


class RemapperKind(StrEnum):
    NONE = "NONE"
    TOM = "TOM"
    AIMM = "AIMM"


class AllocationPolicy(StrEnum):
    DEFAULT = "DEFAULT"
    HOARD = "HOARD"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class MeshConfig(_Section):
    """
    Geometry and timing of the cube mesh.

    Attributes:
        width: Cubes along x
        height: Cubes along y
        link_bits: Bits a link moves per cycle
        router_stages: Router pipeline depth in cycles
        vc_count: Virtual channels per port
        port_count: Ports per router (four mesh links, local and controller)
        vc_buffer_depth: Packets an input virtual channel buffers (its credits)
        header_bits: Size of request, ACK and control packets
        data_bits: Size of an operand or result payload packet
    """

    width: int = Field(default=4, ge=1, le=8)
    height: int = Field(default=4, ge=1, le=8)
    link_bits: int = Field(default=128, gt=0)
    router_stages: int = Field(default=3, ge=1)
    vc_count: int = Field(default=5, ge=1)
    port_count: int = Field(default=6, ge=5)
    vc_buffer_depth: int = Field(default=4, ge=1)
    header_bits: int = Field(default=128, gt=0)
    data_bits: int = Field(default=512, gt=0)

    @property
    def cubes(self) -> int:
        return self.width * self.height

    def coord(self, cube: int) -> tuple[int, int]:
        return cube % self.width, cube // self.width

    def cube_at(self, x: int, y: int) -> int:
        return y * self.width + x

    def manhattan(self, a: int, b: int) -> int:
        ax, ay = self.coord(a)
        bx, by = self.coord(b)
        return abs(ax - bx) + abs(ay - by)

    def neighbors(self, cube: int) -> list[int]:
        """
        Mesh neighbours of a cube in east, west, north, south order.
        """
        x, y = self.coord(cube)
        result = []
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nx, ny = x + dx, y + dy
            if 0 <= nx < self.width and 0 <= ny < self.height:
                result.append(self.cube_at(nx, ny))
        return result

    def diagonal(self, cube: int) -> int:
        x, y = self.coord(cube)
        return self.cube_at(self.width - 1 - x, self.height - 1 - y)

    def corners(self) -> list[int]:
        """
        Corner cubes in attachment order of the memory controllers.
        """
        corners = [
            0,
            self.width - 1,
            (self.height - 1) * self.width,
            self.cubes - 1,
        ]
        return list(dict.fromkeys(corners))


class CubeConfig(_Section):
    capacity_bytes: int = Field(default=1 << 30, gt=0)
    vaults: int = Field(default=32, ge=1)
    banks: int = Field(default=8, ge=1)
    row_bytes: int = Field(default=256, gt=0)
    nmp_table_entries: int = Field(default=512, ge=1)
    row_hit_cycles: int = Field(default=18, ge=1)
    row_miss_cycles: int = Field(default=42, ge=1)
    alu_cycles: int = Field(default=1, ge=0)
    strict: bool = True

    @model_validator(mode="after")
    def check_timing(self) -> CubeConfig:
        if self.row_hit_cycles >= self.row_miss_cycles:
            raise ValueError("row_hit_cycles must be below row_miss_cycles")
        return self


class PagingConfig(_Section):
    page_size: int = 4096
    policy: AllocationPolicy = AllocationPolicy.DEFAULT
    pin_cube: int | None = Field(default=None, ge=0)
    hoard_chunk_frames: int = Field(default=64, ge=1)
    migration_queue: int = Field(default=128, ge=1)
    dma_channels: int = Field(default=1, ge=1)
    os_interrupt_cycles: int = Field(default=50, ge=0)

    @field_validator("policy", mode="before")
    @classmethod
    def upper_policy(cls, value: Any) -> Any:
        return value.upper() if isinstance(value, str) else value

    @field_validator("page_size")
    @classmethod
    def check_page_size(cls, value: int) -> int:
        if value <= 0 or value & (value - 1):
            raise ValueError("page_size must be a power of two")
        return value


class ControllerConfig(_Section):
    """
    Memory controllers, their page information caches and the host side used by PEI.
    """

    count: int = Field(default=4, ge=1, le=4)
    queue_entries: int = Field(default=64, ge=1)
    issue_width: int = Field(default=1, ge=1)
    page_info_entries: int = Field(default=128, ge=1)
    remap_table_entries: int = Field(default=1024, ge=1)
    history_length: int = Field(default=4, ge=1)
    counter_decay: float = Field(default=0.125, gt=0.0, le=1.0)
    counter_period: int = Field(default=10, ge=1)
    cores: int = Field(default=16, ge=1)
    cache_bytes: int = Field(default=32 * 1024, gt=0)
    cache_line: int = Field(default=64, gt=0)
    cache_ways: int = Field(default=8, ge=1)
    mshr_entries: int = Field(default=16, ge=1)
    host_alu_cycles: int = Field(default=1, ge=0)


class AgentConfig(_Section):
    gamma: float = Field(default=0.95, gt=0.0, le=1.0)
    epsilon_start: float = Field(default=1.0, ge=0.0, le=1.0)
    epsilon_end: float = Field(default=0.05, ge=0.0, le=1.0)
    epsilon_decay_ticks: int = Field(default=10_000, ge=1)
    epsilon_decay_episodes: int = Field(default=4, ge=0)
    learning_rate: float = Field(default=1e-3, gt=0.0)
    batch_size: int = Field(default=32, ge=1)
    train_period: int = Field(default=4, ge=1)
    replay_capacity: int = Field(default=32_768, ge=1)
    hidden: int = Field(default=256, ge=1)
    intervals: tuple[int, ...] = AGENT_INTERVALS
    initial_interval: int = 100
    reward_tolerance: float = Field(default=1e-3, ge=0.0)
    target_sync_period: int = Field(default=0, ge=0)
    async_training: bool = False
    keep_replay: bool = False
    checkpoint: str | None = None
    seed: int | None = None

    @model_validator(mode="after")
    def check_intervals(self) -> AgentConfig:
        if tuple(self.intervals) != AGENT_INTERVALS:
            raise ValueError(f"intervals must be {AGENT_INTERVALS}")
        if self.initial_interval not in self.intervals:
            raise ValueError("initial_interval must be one of the intervals")
        return self


class TomConfig(_Section):
    epoch_cycles: int = Field(default=1000, ge=1)
    candidates: int = Field(default=8, ge=1)
    window_ops: int = Field(default=4096, ge=1)
    operand_bytes: int = Field(default=64, ge=1)


class SimConfig(_Section):
    """
    Complete, closed-world configuration of a simulation run.

    Attributes:
        traces: Trace specs, `file:<path>` or `gen:<KIND>:<n>[:<seed>]`
        repeats: Episodes replayed; only the agent's network survives between them
        seed: Master seed of every random choice in the run
        max_cycles: Cycle budget per repeat
        allow_many_processes: Lift the limit of four concurrent processes
        events: Keep per-cycle network and migration event logs
    """

    mesh: MeshConfig = MeshConfig()
    cube: CubeConfig = CubeConfig()
    paging: PagingConfig = PagingConfig()
    controller: ControllerConfig = ControllerConfig()
    agent: AgentConfig = AgentConfig()
    tom: TomConfig = TomConfig()
    technique: Technique = Technique.BNMP
    remapper: RemapperKind = RemapperKind.NONE
    traces: list[str] = Field(default_factory=list)
    repeats: int = Field(default=1, ge=1)
    seed: int = 0
    max_cycles: int = Field(default=10_000_000, ge=1)
    allow_many_processes: bool = False
    events: bool = False

    @field_validator("technique", "remapper", mode="before")
    @classmethod
    def upper_enums(cls, value: Any) -> Any:
        return value.upper() if isinstance(value, str) else value

    @model_validator(mode="after")
    def check_consistency(self) -> SimConfig:
        if self.paging.pin_cube is not None and self.paging.pin_cube >= self.mesh.cubes:
            raise ValueError(f"pin_cube {self.paging.pin_cube} is not a cube of the mesh")
        if self.cube.capacity_bytes % self.paging.page_size:
            raise ValueError("cube capacity must be a multiple of the page size")
        if self.controller.count > len(self.mesh.corners()):
            raise ValueError("more memory controllers than mesh corners")
        return self

    @property
    def agent_seed(self) -> int:
        return self.seed if self.agent.seed is None else self.agent.seed


SECTIONS = ("mesh", "cube", "paging", "controller", "agent", "tom")


def parse_config(text: str) -> SimConfig:
    """
    Parse the line-oriented `section.key = value` configuration format.

    Comments start with `#`. The `run` section sets top-level fields, `workload.trace` may
    repeat and appends one trace spec per occurrence. Comma-separated values become lists.

    Raises:
        ConfigValidationError: On malformed lines, unknown sections, duplicate keys or
            values the models reject
    """
    data: dict[str, Any] = {}
    lines: dict[tuple[str, ...], int] = {}

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue

        key, sep, value = line.partition("=")
        section, dot, name = key.strip().partition(".")
        value = value.strip()
        if not sep or not dot or not name or not value:
            raise ConfigValidationError("expected `section.key = value`", line_no)

        parsed: Any = [v.strip() for v in value.split(",")] if "," in value else value
        if section == "workload":
            if name != "trace":
                raise ConfigValidationError(f"unknown key workload.{name}", line_no)
            data.setdefault("traces", []).append(value)
            lines.setdefault(("traces",), line_no)
            continue

        if section == "run":
            target, loc = data, (name,)
        elif section in SECTIONS:
            target, loc = data.setdefault(section, {}), (section, name)
        else:
            raise ConfigValidationError(f"unknown section {section!r}", line_no)

        if name in target:
            raise ConfigValidationError(f"duplicate key {section}.{name}", line_no)
        target[name] = parsed
        lines[loc] = line_no

    try:
        return SimConfig.model_validate(data)
    except ValidationError as e:
        loc = tuple(str(part) for part in e.errors()[0]["loc"])
        line_no = next(
            (lines[loc[:n]] for n in range(len(loc), 0, -1) if loc[:n] in lines), None
        )
        raise ConfigValidationError(e, line_no)


def read_config(path: str) -> SimConfig:
    with so.open(path, "r") as f:
        text = f.read()
    logging.info("loaded configuration from %s", path)
    return parse_config(text)
