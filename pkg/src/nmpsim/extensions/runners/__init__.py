from .episode import (
    SimulationRun,
    build_allocator,
    build_remapper,
    build_scheduler,
    run_multiprogram,
    run_simulation,
    simulate,
)
from .pool import ProcessPoolRunner
from .simple import SimpleRunner

__all__ = [
    "SimulationRun",
    "build_allocator",
    "build_remapper",
    "build_scheduler",
    "run_multiprogram",
    "run_simulation",
    "simulate",
    "ProcessPoolRunner",
    "SimpleRunner",
]
