from ...core.allocator import FrameAllocator, FramePool


class RoundRobinAllocator(FrameAllocator):
    """
    Stripes the pages of each process over the cubes in first-touch order.
    """

    def __init__(self, pool: FramePool) -> None:
        super().__init__(pool)
        self._cursor: dict[int, int] = {}

    def allocate(
        self, page: int, process_id: int, preferred_cube: int | None = None
    ) -> int:
        if preferred_cube is not None:
            frame = self.pool.allocate_in_cube(preferred_cube)
            if frame is not None:
                return frame

        cursor = self._cursor.get(process_id, 0)
        self._cursor[process_id] = (cursor + 1) % self.pool.cubes
        return self._any_cube(page, cursor)
