from __future__ import annotations

import logging
from dataclasses import dataclass

from .config import CubeConfig
from .exceptions import InternalConsistencyError, InvalidAddress


@dataclass(slots=True)
class Bank:
    open_row: int | None = None
    busy_until: int = 0


@dataclass(frozen=True, slots=True)
class AccessResult:
    latency: int
    hit: bool


class NmpTable:
    """
    Bounded table of the NMP-ops outstanding at one cube.
    """

    def __init__(self, capacity: int, strict: bool = True) -> None:
        self.capacity = capacity
        self.strict = strict
        self.entries: dict[int, object] = {}
        self.rejections = 0
        self.absent_retires = 0

    @property
    def occupancy(self) -> int:
        return len(self.entries)

    def full(self) -> bool:
        return len(self.entries) >= self.capacity

    def insert(self, seq_id: int, entry: object = None) -> bool:
        if self.full():
            self.rejections += 1
            return False
        self.entries[seq_id] = entry
        return True

    def get(self, seq_id: int) -> object:
        return self.entries.get(seq_id)

    def retire(self, seq_id: int, cycle: int | None = None) -> None:
        if seq_id not in self.entries:
            if self.strict:
                raise InternalConsistencyError(f"retire of absent NMP entry {seq_id}", cycle)
            self.absent_retires += 1
            logging.warning("retire of absent NMP entry %s at cycle %s", seq_id, cycle)
            return
        del self.entries[seq_id]


class CubeState:
    """
    One memory cube: vaults of banks with open-row buffers and the cube's NMP-op table.

    Args:
        cube_id: Position of the cube in the mesh
        config: Geometry and timing of the cube
    """

    def __init__(self, cube_id: int, config: CubeConfig) -> None:
        self.cube_id = cube_id
        self.config = config
        self.banks = [[Bank() for _ in range(config.banks)] for _ in range(config.vaults)]
        self.nmp_table = NmpTable(config.nmp_table_entries, config.strict)
        self.row_buffer_hits = 0
        self.row_buffer_accesses = 0
        self.completions = 0

    @property
    def hit_rate(self) -> float:
        if self.row_buffer_accesses == 0:
            return 0.0
        return self.row_buffer_hits / self.row_buffer_accesses

    def bank(self, vault: int, bank: int) -> Bank:
        if not 0 <= vault < self.config.vaults:
            raise InvalidAddress("vault", vault)
        if not 0 <= bank < self.config.banks:
            raise InvalidAddress("bank", bank)
        return self.banks[vault][bank]

    def access(self, vault: int, bank: int, row: int) -> AccessResult:
        """
        Open-page access: a hit iff the bank's open row is `row`; the row stays open afterwards.
        """
        if row < 0:
            raise InvalidAddress("row", row)
        target = self.bank(vault, bank)
        hit = target.open_row == row
        target.open_row = row
        self.row_buffer_accesses += 1
        if hit:
            self.row_buffer_hits += 1
            return AccessResult(self.config.row_hit_cycles, True)
        return AccessResult(self.config.row_miss_cycles, False)

    def schedule_access(self, vault: int, bank: int, row: int, cycle: int) -> int:
        """
        Access a bank at `cycle`, queueing behind its previous access.

        Returns:
            int: Cycle at which the data is available
        """
        target = self.bank(vault, bank)
        start = max(cycle, target.busy_until)
        result = self.access(vault, bank, row)
        target.busy_until = start + result.latency
        return target.busy_until


def cube_access(cube: CubeState, vault: int, bank: int, row: int) -> AccessResult:
    return cube.access(vault, bank, row)
