from __future__ import annotations

import logging
from collections import deque
from typing import TYPE_CHECKING, Sequence

from ...core.config import MeshConfig, RemapperKind, SimConfig, Technique
from ...core.dram import DramMapping, tom_candidates
from ...core.offload import ResolvedOp, Role, SchedulePlan
from ...core.remapper import Remapper

if TYPE_CHECKING:
    from ...core.simulation import Simulator

# operand physical addresses of one op in dest, src1, src2 order
WindowOp = tuple[int, ...]

ROLE_INDEX = {Role.DEST: 0, Role.SRC1: 1, Role.SRC2: 2}


def movement_score(
    window: Sequence[WindowOp],
    mapping: DramMapping,
    mesh: MeshConfig,
    compute_role: Role = Role.DEST,
    operand_bytes: int = 64,
) -> int:
    """
    Bytes times hops every operand travels to the compute cube under `mapping`.
    """
    score = 0
    index = ROLE_INDEX[compute_role]
    for paddrs in window:
        compute = mapping.cube_of(paddrs[min(index, len(paddrs) - 1)])
        for paddr in paddrs:
            score += operand_bytes * mesh.manhattan(mapping.cube_of(paddr), compute)
    return score


def tom_epoch_select(
    window: Sequence[WindowOp],
    candidates: Sequence[DramMapping],
    mesh: MeshConfig,
    current: int = 0,
    compute_role: Role = Role.DEST,
    operand_bytes: int = 64,
) -> int:
    """
    Index of the candidate mapping with the least data movement over the window.

    Ties go to the lowest index; an empty window keeps `current`.
    """
    if not window:
        return current
    scores = [
        movement_score(window, m, mesh, compute_role, operand_bytes) for m in candidates
    ]
    return scores.index(min(scores))


class TomRemapper(Remapper):
    """
    Epoch-based selection of the physical to DRAM mapping.

    Completed ops are profiled into a bounded window; at the end of every epoch each candidate
    mapping is scored on the window and the least-movement one is installed for the next epoch.
    Switching mappings re-lays out the data without a modeled cost.
    """

    kind = RemapperKind.TOM

    def __init__(self, config: SimConfig) -> None:
        super().__init__(config)
        self.candidates = tom_candidates(
            config.mesh, config.cube, config.paging.page_size, config.tom.candidates
        )
        self.compute_role = Role.DEST if config.technique == Technique.BNMP else Role.SRC1
        self.window: deque[WindowOp] = deque(maxlen=config.tom.window_ops)
        self.current = 0
        self.switches = 0

    def begin_episode(self, sim: Simulator) -> None:
        self.window.clear()
        self.current = 0
        sim.set_mapping(self.candidates[0])

    def on_op_complete(
        self, sim: Simulator, resolved: ResolvedOp, plan: SchedulePlan
    ) -> None:
        self.window.append(tuple(resolved.paddrs.values()))

    def on_cycle(self, sim: Simulator, cycle: int) -> None:
        if cycle == 0 or cycle % self.config.tom.epoch_cycles:
            return
        chosen = tom_epoch_select(
            self.window,
            self.candidates,
            self.config.mesh,
            self.current,
            self.compute_role,
            self.config.tom.operand_bytes,
        )
        self.window.clear()
        if chosen == self.current:
            return
        logging.info(
            "cycle %s: switching DRAM mapping %s -> %s",
            cycle,
            self.candidates[self.current],
            self.candidates[chosen],
        )
        self.current = chosen
        self.switches += 1
        sim.set_mapping(self.candidates[chosen])

    def on_interval(self, sim: Simulator, cycle: int, opc: float) -> None:
        pass
