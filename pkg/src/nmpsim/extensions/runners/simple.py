from typing import Sequence

from ...core.config import SimConfig
from ...core.metrics import MetricsReport
from ...core.runner import Runner, Simulate
from .episode import run_simulation


class SimpleRunner(Runner):
    def __init__(self, simulate: Simulate = run_simulation) -> None:
        super().__init__(simulate)

    def run_matrix(self, configs: Sequence[SimConfig]) -> list[MetricsReport]:
        return [self.run(config) for config in configs]
