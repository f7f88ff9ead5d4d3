import pytest

from nmpsim.core import (
    InvalidParameter,
    KernelKind,
    NmpOp,
    OpKind,
    OpTrace,
    active_page_distribution,
    affinity_analysis,
    classify_page_accesses,
    generate_kernel_trace,
)
from nmpsim.core.analysis import QUADRANTS, bin_labels

PAGE = 4096


def op(seq: int, dest: int, src1: int, src2: int | None = None) -> NmpOp:
    kind = OpKind.ADD if src2 is None else OpKind.MAC
    return NmpOp(seq, kind, dest * PAGE, src1 * PAGE, None if src2 is None else src2 * PAGE, 0)


def distinct_pages(trace: OpTrace) -> int:
    return len({p for o in trace.ops for p in trace.pages(o)})


# -----------------------------------------------------------------------------
# Access classification
# -----------------------------------------------------------------------------
def test_bin_labels():
    assert bin_labels([1, 4]) == ["<1", "[1,4)", ">=4"]


def test_classify_counts_every_operand_reference():
    trace = OpTrace((op(0, 1, 2, 3), op(1, 1, 2), op(2, 1, 4)), PAGE)
    frame = classify_page_accesses(trace, [2, 3])

    assert frame["bin"].to_list() == ["<2", "[2,3)", ">=3"]
    # page 1: 3 accesses, page 2: 2, pages 3 and 4: 1
    assert frame["pages"].to_list() == [2, 1, 1]


@pytest.mark.parametrize("edges", [[], [4, 2], [1, 1]])
def test_classify_rejects_bad_edges(edges: list[int]):
    trace = OpTrace((op(0, 1, 2),), PAGE)
    with pytest.raises(InvalidParameter):
        classify_page_accesses(trace, edges)


@pytest.mark.parametrize("seed", range(50))
def test_classification_bins_sum_to_distinct_pages(seed: int):
    for kind in KernelKind:
        trace = generate_kernel_trace(kind, 128, seed=seed)
        frame = classify_page_accesses(trace, [1, 2, 4, 8, 16, 64])
        assert frame["pages"].sum() == distinct_pages(trace)


# -----------------------------------------------------------------------------
# Active pages
# -----------------------------------------------------------------------------
def test_active_pages_per_epoch():
    trace = OpTrace((op(0, 1, 2), op(1, 1, 3), op(2, 5, 6), op(3, 5, 6)), PAGE)

    # epoch 0 holds ops 0-1 (pages 1,2,3), epoch 1 holds ops 2-3 (pages 5,6)
    assert active_page_distribution(trace, epoch_cycles=2) == pytest.approx(2.5)
    # one epoch with everything
    assert active_page_distribution(trace, epoch_cycles=10) == pytest.approx(5.0)
    # two ops per cycle fold all four ops into the first epoch of two cycles
    assert active_page_distribution(trace, 2, issue_rate=2.0) == pytest.approx(5.0)


def test_active_pages_of_empty_trace():
    assert active_page_distribution(OpTrace(()), 100) == 0.0


def test_active_pages_rejects_bad_epoch():
    with pytest.raises(InvalidParameter):
        active_page_distribution(OpTrace(()), 0)


# -----------------------------------------------------------------------------
# Affinity
# -----------------------------------------------------------------------------
def test_affinity_radix_and_weights():
    trace = OpTrace((op(0, 1, 2), op(1, 1, 2), op(2, 1, 3)), PAGE)
    profile = affinity_analysis(trace, n_bins=2)

    assert profile.per_page_radix == {1: 2, 2: 1, 3: 1}
    assert profile.per_edge_weight == {(1, 2): 2, (1, 3): 1}
    assert sum(profile.quadrant_counts) == 3


def test_affinity_single_page_is_low_low():
    trace = OpTrace((op(0, 1, 1),), PAGE)
    profile = affinity_analysis(trace)
    assert profile.quadrant_counts == (1, 0, 0, 0)


def test_affinity_frame():
    trace = OpTrace((op(0, 1, 2),), PAGE)
    frame = affinity_analysis(trace).to_frame()
    assert frame["quadrant"].to_list() == list(QUADRANTS)


def test_affinity_rejects_single_bin():
    with pytest.raises(InvalidParameter):
        affinity_analysis(OpTrace(()), n_bins=1)


@pytest.mark.parametrize("seed", range(50))
def test_affinity_quadrants_sum_to_distinct_pages(seed: int):
    for kind in KernelKind:
        trace = generate_kernel_trace(kind, 128, seed=seed)
        profile = affinity_analysis(trace)
        assert sum(profile.quadrant_counts) == distinct_pages(trace)
