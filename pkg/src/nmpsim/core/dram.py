from __future__ import annotations

from dataclasses import dataclass

from .config import CubeConfig, MeshConfig
from .exceptions import InvalidAddress, InvalidParameter


@dataclass(frozen=True, slots=True)
class DramCoordinate:
    cube: int
    vault: int
    bank: int
    row: int
    column: int


class DramMapping:
    """
    Physical address to DRAM coordinate mapping.

    A physical address is split into a page frame number and a page offset. The frame is first
    passed through an optional bit-field swap that exchanges the cube-select bits with a lower
    field of the frame number (the re-layout candidates evaluated by TOM); without a swap a
    frame lives entirely in cube `frame // frames_per_cube`. Inside the cube the page offset
    selects the column within a row, and successive rows of a frame stripe over vaults, then
    banks, then rows. Every stage is a bijection, so the whole mapping is one as well.

    Args:
        mesh: Mesh geometry, for the cube count
        cube: Cube geometry
        page_size: Frame size in bytes
        swap_shift: Low bit of the frame-number field swapped with the cube bits, or None
    """

    def __init__(
        self,
        mesh: MeshConfig,
        cube: CubeConfig,
        page_size: int,
        swap_shift: int | None = None,
    ) -> None:
        self.cubes = mesh.cubes
        self.vaults = cube.vaults
        self.banks = cube.banks
        self.row_bytes = cube.row_bytes
        self.page_size = page_size
        self.frames_per_cube = cube.capacity_bytes // page_size
        self.total_frames = self.frames_per_cube * self.cubes
        self.capacity = self.total_frames * page_size
        self.swap_shift = swap_shift

        if swap_shift is not None:
            if self.frames_per_cube & (self.frames_per_cube - 1) or self.cubes & (
                self.cubes - 1
            ):
                raise InvalidParameter(
                    "swap_shift", swap_shift, "field swaps need power-of-two frame and cube counts"
                )
            self._cube_shift = self.frames_per_cube.bit_length() - 1
            self._cube_bits = self.cubes.bit_length() - 1
            if swap_shift < 0 or swap_shift + self._cube_bits > self._cube_shift:
                raise InvalidParameter("swap_shift", swap_shift, "overlaps the cube field")

    def __repr__(self) -> str:
        return f"DramMapping(swap_shift={self.swap_shift})"

    def dram_frame(self, frame: int) -> int:
        """
        DRAM-side frame holding physical frame `frame`.
        """
        if not 0 <= frame < self.total_frames:
            raise InvalidAddress("frame", frame)
        if self.swap_shift is None or self._cube_bits == 0:
            return frame
        mask = (1 << self._cube_bits) - 1
        low = (frame >> self.swap_shift) & mask
        high = (frame >> self._cube_shift) & mask
        frame &= ~((mask << self.swap_shift) | (mask << self._cube_shift))
        return frame | (low << self._cube_shift) | (high << self.swap_shift)

    def cube_of_frame(self, frame: int) -> int:
        return self.dram_frame(frame) // self.frames_per_cube

    def cube_of(self, paddr: int) -> int:
        if not 0 <= paddr < self.capacity:
            raise InvalidAddress("physical address", paddr)
        return self.cube_of_frame(paddr // self.page_size)

    def map(self, paddr: int) -> DramCoordinate:
        if not 0 <= paddr < self.capacity:
            raise InvalidAddress("physical address", paddr)
        frame, offset = divmod(paddr, self.page_size)
        cube, local_frame = divmod(self.dram_frame(frame), self.frames_per_cube)

        line, column = divmod(local_frame * self.page_size + offset, self.row_bytes)
        line, vault = divmod(line, self.vaults)
        row, bank = divmod(line, self.banks)
        return DramCoordinate(cube, vault, bank, row, column)


def dram_map(mapping: DramMapping, paddr: int) -> DramCoordinate:
    return mapping.map(paddr)


def tom_candidates(
    mesh: MeshConfig, cube: CubeConfig, page_size: int, count: int
) -> list[DramMapping]:
    """
    Re-layout candidates: the identity mapping followed by cube-field swaps at frame bits
    0, 1, 2 and so on, as far as they fit.
    """
    candidates = [DramMapping(mesh, cube, page_size)]
    frames_per_cube = cube.capacity_bytes // page_size
    cube_shift = frames_per_cube.bit_length() - 1
    cube_bits = mesh.cubes.bit_length() - 1
    power_of_two = not (frames_per_cube & (frames_per_cube - 1) or mesh.cubes & (mesh.cubes - 1))
    if not power_of_two or cube_bits == 0:
        return candidates

    shift = 0
    while len(candidates) < count and shift + cube_bits <= cube_shift:
        candidates.append(DramMapping(mesh, cube, page_size, swap_shift=shift))
        shift += 1
    return candidates
