from __future__ import annotations

from typing import TYPE_CHECKING

from ...core.config import RemapperKind
from ...core.remapper import Remapper

if TYPE_CHECKING:
    from ...core.simulation import Simulator


class NoRemapper(Remapper):
    """
    Leaves data and computation where the allocator and the scheduler put them.
    """

    kind = RemapperKind.NONE

    def on_interval(self, sim: Simulator, cycle: int, opc: float) -> None:
        pass
