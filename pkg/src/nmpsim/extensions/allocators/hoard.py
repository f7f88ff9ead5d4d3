from __future__ import annotations

from collections import deque

from ...core.allocator import FrameAllocator, FramePool


class HoardAllocator(FrameAllocator):
    """
    Chunked per-process allocation in the style of the Hoard allocator.

    Every process owns private chunks of contiguous frames claimed from the global pool. A
    process allocates from its current chunk; when the chunk is used up it claims the next one,
    preferring the cube of its previous chunk, so a process's pages cluster in as few cubes as
    possible and no chunk is ever shared between processes. Released frames return to the
    releasing process's private list.

    Args:
        pool: The global frame pool
        chunk_frames: Frames per chunk
    """

    def __init__(self, pool: FramePool, chunk_frames: int = 64) -> None:
        super().__init__(pool)
        self.chunk_frames = chunk_frames
        self._free: dict[int, deque[int]] = {}
        self._cube: dict[int, int] = {}

    def home_cube(self, process_id: int) -> int:
        return process_id % self.pool.cubes

    def owned_free(self, process_id: int) -> list[int]:
        return list(self._free.get(process_id, ()))

    def _claim_chunk(self, process_id: int) -> bool:
        first = self._cube.get(process_id, self.home_cube(process_id))
        for k in range(self.pool.cubes):
            cube = (first + k) % self.pool.cubes
            chunk = self.pool.allocate_chunk(cube, self.chunk_frames)
            if chunk is not None:
                self._free.setdefault(process_id, deque()).extend(chunk)
                self._cube[process_id] = cube
                return True
        return False

    def _take(self, process_id: int, cube: int) -> int | None:
        free = self._free.get(process_id)
        if not free:
            return None
        for frame in free:
            if self.pool.cube_of(frame) == cube:
                free.remove(frame)
                return frame
        return None

    def allocate(
        self, page: int, process_id: int, preferred_cube: int | None = None
    ) -> int:
        if preferred_cube is not None:
            frame = self._take(process_id, preferred_cube)
            if frame is None:
                frame = self.pool.allocate_in_cube(preferred_cube)
            if frame is not None:
                return frame

        free = self._free.get(process_id)
        if free or self._claim_chunk(process_id):
            return self._free[process_id].popleft()

        # the pool is too fragmented for a whole chunk
        return self._any_cube(page, self._cube.get(process_id, 0))

    def claim_in_cube(self, cube: int, process_id: int) -> int | None:
        frame = self._take(process_id, cube)
        if frame is not None:
            return frame
        return self.pool.allocate_in_cube(cube)

    def release(self, frame: int, process_id: int) -> None:
        self._free.setdefault(process_id, deque()).append(frame)

    def free_frames(self) -> int:
        return self.pool.free_count + sum(len(f) for f in self._free.values())
