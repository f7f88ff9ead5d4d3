from __future__ import annotations

from abc import ABC, abstractmethod
from typing import TYPE_CHECKING

from .config import RemapperKind, SimConfig
from .metrics import EventTally
from .offload import ResolvedOp, SchedulePlan

if TYPE_CHECKING:
    from .simulation import Simulator


class Remapper(ABC):
    """
    Policy that changes data placement or compute placement while a trace runs.

    One remapper instance lives for a whole run, across repeats; `begin_episode` is called with
    every freshly built simulator.
    """

    kind: RemapperKind

    def __init__(self, config: SimConfig) -> None:
        self.config = config

    def initial_interval(self) -> int:
        """
        Length of the first OPC measurement interval in cycles.
        """
        return self.config.agent.initial_interval

    def begin_episode(self, sim: Simulator) -> None:
        pass

    def on_cycle(self, sim: Simulator, cycle: int) -> None:
        pass

    def on_op_complete(
        self, sim: Simulator, resolved: ResolvedOp, plan: SchedulePlan
    ) -> None:
        pass

    @abstractmethod
    def on_interval(self, sim: Simulator, cycle: int, opc: float) -> None:
        """
        Called at the end of every OPC interval while ops are outstanding.
        """

    def end_episode(self, sim: Simulator, opc: float) -> None:
        pass

    def tally(self) -> EventTally:
        """
        Energy-relevant events of the policy hardware during the last episode.
        """
        return EventTally()

    def close(self) -> None:
        pass
