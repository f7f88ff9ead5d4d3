import pytest

from nmpsim.core import FramePool, OutOfMemory
from nmpsim.extensions.allocators import HoardAllocator, RoundRobinAllocator


# -----------------------------------------------------------------------------
# Round robin
# -----------------------------------------------------------------------------
def test_round_robin_stripes_each_process():
    allocator = RoundRobinAllocator(FramePool(4, 8))
    cubes = [allocator.pool.cube_of(allocator.allocate(p, 0)) for p in range(6)]
    assert cubes == [0, 1, 2, 3, 0, 1]

    other = allocator.pool.cube_of(allocator.allocate(100, 1))
    assert other == 0


def test_round_robin_prefers_pinned_cube():
    allocator = RoundRobinAllocator(FramePool(4, 8))
    frames = [allocator.allocate(p, 0, preferred_cube=2) for p in range(8)]
    assert {allocator.pool.cube_of(f) for f in frames} == {2}
    # the cube is full, allocation spills over
    assert allocator.pool.cube_of(allocator.allocate(8, 0, preferred_cube=2)) != 2


def test_out_of_memory():
    allocator = RoundRobinAllocator(FramePool(2, 2))
    for page in range(4):
        allocator.allocate(page, 0)
    with pytest.raises(OutOfMemory):
        allocator.allocate(4, 0)


def test_released_frames_are_reused():
    allocator = RoundRobinAllocator(FramePool(1, 2))
    first = allocator.allocate(0, 0)
    allocator.allocate(1, 0)
    allocator.release(first, 0)
    assert allocator.allocate(2, 0) == first


# -----------------------------------------------------------------------------
# Hoard
# -----------------------------------------------------------------------------
def test_hoard_keeps_a_process_in_one_cube():
    allocator = HoardAllocator(FramePool(16, 256), chunk_frames=64)
    frames = [allocator.allocate(p, 0) for p in range(64)]

    assert len(set(frames)) == 64
    assert {allocator.pool.cube_of(f) for f in frames} == {0}


def test_hoard_next_chunk_prefers_the_same_cube():
    allocator = HoardAllocator(FramePool(16, 256), chunk_frames=64)
    frames = [allocator.allocate(p, 0) for p in range(200)]
    assert {allocator.pool.cube_of(f) for f in frames} == {0}


def test_hoard_processes_never_share_chunks():
    allocator = HoardAllocator(FramePool(4, 128), chunk_frames=16)
    owned: dict[int, set[int]] = {0: set(), 1: set(), 2: set()}
    for page in range(90):
        pid = page % 3
        owned[pid].add(allocator.allocate(page, pid))

    chunks = {pid: {f // 16 for f in frames} for pid, frames in owned.items()}
    assert not chunks[0] & chunks[1]
    assert not chunks[0] & chunks[2]
    assert not chunks[1] & chunks[2]
    assert allocator.pool.cube_of(next(iter(owned[1]))) == allocator.home_cube(1)


def test_hoard_release_returns_frame_to_owner():
    allocator = HoardAllocator(FramePool(4, 64), chunk_frames=8)
    frame = allocator.allocate(0, 1)
    total = allocator.free_frames()

    allocator.release(frame, 1)
    assert frame in allocator.owned_free(1)
    assert allocator.free_frames() == total + 1
    cube = allocator.pool.cube_of(frame)
    assert allocator.pool.cube_of(allocator.claim_in_cube(cube, 1)) == cube  # type: ignore


def test_hoard_preferred_cube():
    allocator = HoardAllocator(FramePool(4, 64), chunk_frames=8)
    frame = allocator.allocate(0, 0, preferred_cube=3)
    assert allocator.pool.cube_of(frame) == 3


def test_hoard_falls_back_when_no_chunk_fits():
    allocator = HoardAllocator(FramePool(2, 4), chunk_frames=8)
    frames = {allocator.allocate(p, 0) for p in range(8)}
    assert len(frames) == 8
    with pytest.raises(OutOfMemory):
        allocator.allocate(8, 0)
