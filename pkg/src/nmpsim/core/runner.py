from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import Callable, Sequence

from .config import SimConfig
from .metrics import MetricsReport

Simulate = Callable[[SimConfig], MetricsReport]


class Runner(ABC):
    """
    Executes a matrix of independent simulation runs.

    Runs share no state, so a runner may execute them in any order or in parallel; the reports
    are returned in the order of the configurations.

    Args:
        simulate: Module level function turning one configuration into a report
    """

    def __init__(self, simulate: Simulate) -> None:
        self.simulate = simulate

    @abstractmethod
    def run_matrix(self, configs: Sequence[SimConfig]) -> list[MetricsReport]:
        """
        Run every configuration and collect the reports.
        This method should be implemented by subclasses.
        """

    def run(self, config: SimConfig) -> MetricsReport:
        logging.info(
            "running %s + %s with seed %s", config.technique, config.remapper, config.seed
        )
        return self.simulate(config)
