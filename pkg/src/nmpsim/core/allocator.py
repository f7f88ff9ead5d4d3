from __future__ import annotations

from abc import ABC, abstractmethod
from collections import deque

from .exceptions import OutOfMemory


class FramePool:
    """
    Global pool of physical page frames, partitioned per cube.

    Each cube hands out never-used frames from a bump pointer and reuses returned frames in
    FIFO order. Frame `f` belongs to cube `f // frames_per_cube`.
    """

    def __init__(self, cubes: int, frames_per_cube: int) -> None:
        self.cubes = cubes
        self.frames_per_cube = frames_per_cube
        self.total_frames = cubes * frames_per_cube
        self._bump = [0] * cubes
        self._returned: list[deque[int]] = [deque() for _ in range(cubes)]

    def cube_of(self, frame: int) -> int:
        return frame // self.frames_per_cube

    def free_in_cube(self, cube: int) -> int:
        return self.frames_per_cube - self._bump[cube] + len(self._returned[cube])

    @property
    def free_count(self) -> int:
        return sum(self.free_in_cube(c) for c in range(self.cubes))

    def allocate_in_cube(self, cube: int) -> int | None:
        if self._returned[cube]:
            return self._returned[cube].popleft()
        if self._bump[cube] < self.frames_per_cube:
            frame = cube * self.frames_per_cube + self._bump[cube]
            self._bump[cube] += 1
            return frame
        return None

    def allocate_chunk(self, cube: int, size: int) -> list[int] | None:
        """
        `size` contiguous never-used frames of one cube, or None if the cube has no room.
        """
        start = self._bump[cube]
        if start + size > self.frames_per_cube:
            return None
        self._bump[cube] += size
        base = cube * self.frames_per_cube + start
        return list(range(base, base + size))

    def release(self, frame: int) -> None:
        self._returned[self.cube_of(frame)].append(frame)


class FrameAllocator(ABC):
    """
    Frame allocation policy used on first touch of a page.
    """

    def __init__(self, pool: FramePool) -> None:
        self.pool = pool

    @abstractmethod
    def allocate(
        self, page: int, process_id: int, preferred_cube: int | None = None
    ) -> int:
        """
        Allocate a frame for `page`.

        Raises:
            OutOfMemory: If no cube has a free frame
        """

    def claim_in_cube(self, cube: int, process_id: int) -> int | None:
        """
        A free frame in exactly this cube, or None.
        """
        return self.pool.allocate_in_cube(cube)

    def release(self, frame: int, process_id: int) -> None:
        self.pool.release(frame)

    def free_frames(self) -> int:
        return self.pool.free_count

    def _any_cube(self, page: int, first: int) -> int:
        for k in range(self.pool.cubes):
            frame = self.pool.allocate_in_cube((first + k) % self.pool.cubes)
            if frame is not None:
                return frame
        raise OutOfMemory(page)
