from .agent import (
    Action,
    Agent,
    Experience,
    PageView,
    QNetwork,
    ReplayBuffer,
    StateEncoder,
    apply_action,
    compute_reward,
    q_forward,
    select_action,
    train_step,
)
from .allocator import FrameAllocator, FramePool
from .analysis import (
    AffinityProfile,
    active_page_distribution,
    affinity_analysis,
    classify_page_accesses,
)
from .config import (
    NMPSIM_LOG_LEVEL_ENV_KEY,
    AgentConfig,
    AllocationPolicy,
    ControllerConfig,
    CubeConfig,
    MeshConfig,
    PagingConfig,
    RemapperKind,
    SimConfig,
    Technique,
    TomConfig,
    parse_config,
    read_config,
)
from .cube import CubeState, NmpTable, cube_access
from .dram import DramCoordinate, DramMapping, dram_map, tom_candidates
from .exceptions import (
    ConfigValidationError,
    InternalConsistencyError,
    InvalidAddress,
    InvalidPage,
    InvalidParameter,
    OutOfMemory,
    SegmentationFault,
    ShapeMismatch,
    SimulationStalled,
    TooManyProcesses,
    TraceParseError,
    TrainingDiverged,
)
from .meta import RunMetaData, RunStatus
from .metrics import (
    EnergyBreakdown,
    EventTally,
    MetricsReport,
    compute_energy,
    compute_utilization,
    format_speedup,
    speedup,
)
from .network import MeshNetwork, Packet, PacketKind, Port, route_next_hop
from .offload import (
    ComputeRemapTable,
    HostCache,
    NmpScheduler,
    PageInfoCache,
    PageInfoEntry,
    ResolvedOp,
    Role,
    SchedulePlan,
    SystemCounters,
    TouchKind,
    page_info_touch,
    schedule_op,
    select_candidate_page,
)
from .paging import MigrationManager, MigrationOutcome, PageTable
from .remapper import Remapper
from .run_id import RunId
from .runner import Runner
from .simulation import EpisodeResult, Simulator
from .trace import (
    KernelKind,
    NmpOp,
    OpKind,
    OpTrace,
    generate_kernel_trace,
    merge_traces,
    parse_trace,
    serialize_trace,
)
from .workload import load_workload, resolve_trace_spec

__all__ = [
    "Action",
    "Agent",
    "Experience",
    "PageView",
    "QNetwork",
    "ReplayBuffer",
    "StateEncoder",
    "apply_action",
    "compute_reward",
    "q_forward",
    "select_action",
    "train_step",
    "FrameAllocator",
    "FramePool",
    "AffinityProfile",
    "active_page_distribution",
    "affinity_analysis",
    "classify_page_accesses",
    "NMPSIM_LOG_LEVEL_ENV_KEY",
    "AgentConfig",
    "AllocationPolicy",
    "ControllerConfig",
    "CubeConfig",
    "MeshConfig",
    "PagingConfig",
    "RemapperKind",
    "SimConfig",
    "Technique",
    "TomConfig",
    "parse_config",
    "read_config",
    "CubeState",
    "NmpTable",
    "cube_access",
    "DramCoordinate",
    "DramMapping",
    "dram_map",
    "tom_candidates",
    "ConfigValidationError",
    "InternalConsistencyError",
    "InvalidAddress",
    "InvalidPage",
    "InvalidParameter",
    "OutOfMemory",
    "SegmentationFault",
    "ShapeMismatch",
    "SimulationStalled",
    "TooManyProcesses",
    "TraceParseError",
    "TrainingDiverged",
    "RunMetaData",
    "RunStatus",
    "EnergyBreakdown",
    "EventTally",
    "MetricsReport",
    "compute_energy",
    "compute_utilization",
    "format_speedup",
    "speedup",
    "MeshNetwork",
    "Packet",
    "PacketKind",
    "Port",
    "route_next_hop",
    "ComputeRemapTable",
    "HostCache",
    "NmpScheduler",
    "PageInfoCache",
    "PageInfoEntry",
    "ResolvedOp",
    "Role",
    "SchedulePlan",
    "SystemCounters",
    "TouchKind",
    "page_info_touch",
    "schedule_op",
    "select_candidate_page",
    "MigrationManager",
    "MigrationOutcome",
    "PageTable",
    "Remapper",
    "RunId",
    "Runner",
    "EpisodeResult",
    "Simulator",
    "KernelKind",
    "NmpOp",
    "OpKind",
    "OpTrace",
    "generate_kernel_trace",
    "merge_traces",
    "parse_trace",
    "serialize_trace",
    "load_workload",
    "resolve_trace_spec",
]
