import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

from ...core.config import SimConfig
from ...core.metrics import MetricsReport
from ...core.runner import Runner, Simulate
from .episode import run_simulation


class ProcessPoolRunner(Runner):
    """
    Runs independent configurations in worker processes.

    Args:
        simulate: Picklable module level function
        workers: Worker process count (None lets the executor decide)
    """

    def __init__(self, simulate: Simulate = run_simulation, workers: int | None = None) -> None:
        super().__init__(simulate)
        self.workers = workers

    def run_matrix(self, configs: Sequence[SimConfig]) -> list[MetricsReport]:
        logging.info("running %s configurations on %s workers", len(configs), self.workers)
        with ProcessPoolExecutor(max_workers=self.workers) as executor:
            return list(executor.map(self.simulate, configs))
