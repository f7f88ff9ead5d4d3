from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import polars as pl

from .exceptions import InvalidParameter
from .trace import OpTrace, page_id

QUADRANTS = (
    "low_radix_low_weight",
    "low_radix_high_weight",
    "high_radix_low_weight",
    "high_radix_high_weight",
)


@dataclass(frozen=True)
class AffinityProfile:
    """
    Page affinity summary of a trace.

    The radix of a page is the number of distinct pages it shares an op with; the weight of an
    edge is the number of ops touching both of its pages. Pages are binned on an
    `n_bins x n_bins` grid of (radix, strongest incident edge weight) and the grid is collapsed
    into four quadrants at the middle bin.

    Attributes:
        n_bins: Bins per axis
        quadrant_counts: Pages per quadrant, ordered as `QUADRANTS`
        per_page_radix: Radix of every distinct page
        per_edge_weight: Co-access count of every unordered page pair `(low, high)`
    """

    n_bins: int
    quadrant_counts: tuple[int, int, int, int]
    per_page_radix: dict[int, int] = field(default_factory=dict)
    per_edge_weight: dict[tuple[int, int], int] = field(default_factory=dict)

    def to_frame(self) -> pl.DataFrame:
        return pl.DataFrame(
            {"quadrant": list(QUADRANTS), "pages": list(self.quadrant_counts)},
            schema={"quadrant": pl.String, "pages": pl.Int64},
        )


def _touches(trace: OpTrace, distinct: bool) -> pl.DataFrame:
    """
    One row per page reference of every op (`distinct` drops repeated pages within an op).
    """
    op_index: list[int] = []
    pages: list[int] = []
    for index, op in enumerate(trace.ops):
        if distinct:
            touched = trace.pages(op)
        else:
            touched = [
                page_id(op.process_id, vaddr, trace.page_size)
                for vaddr in op.operands()
            ]
        op_index.extend([index] * len(touched))
        pages.extend(touched)
    return pl.DataFrame(
        {"op": op_index, "page": pages},
        schema={"op": pl.Int64, "page": pl.Int64},
    )


def bin_labels(bin_edges: Sequence[int]) -> list[str]:
    labels = [f"<{bin_edges[0]}"]
    for low, high in zip(bin_edges, bin_edges[1:]):
        labels.append(f"[{low},{high})")
    labels.append(f">={bin_edges[-1]}")
    return labels


def classify_page_accesses(trace: OpTrace, bin_edges: Sequence[int]) -> pl.DataFrame:
    """
    Histogram of distinct pages per access-count bin.

    Every operand reference counts as one access. With edges `e0 < e1 < ...` the bins are
    `<e0`, `[e0,e1)`, ..., `>=e_last`.

    Returns:
        pl.DataFrame: Columns `bin` and `pages`, one row per bin in ascending order
    """
    if not bin_edges:
        raise InvalidParameter("bin_edges", bin_edges, "must not be empty")
    if any(b <= a for a, b in zip(bin_edges, bin_edges[1:])):
        raise InvalidParameter("bin_edges", bin_edges, "must be strictly ascending")

    counts = _touches(trace, distinct=False).group_by("page").len()
    index = np.searchsorted(
        np.asarray(bin_edges), counts["len"].to_numpy(), side="right"
    )
    histogram = np.bincount(index, minlength=len(bin_edges) + 1)
    return pl.DataFrame(
        {"bin": bin_labels(bin_edges), "pages": histogram.tolist()},
        schema={"bin": pl.String, "pages": pl.Int64},
    )


def active_page_distribution(
    trace: OpTrace, epoch_cycles: int, issue_rate: float = 1.0
) -> float:
    """
    Mean number of distinct pages touched per epoch.

    Op `seq_id` issues at nominal cycle `seq_id / issue_rate`; epochs without ops are not
    counted. An empty trace yields 0.0.
    """
    if epoch_cycles <= 0:
        raise InvalidParameter("epoch_cycles", epoch_cycles)
    if issue_rate <= 0:
        raise InvalidParameter("issue_rate", issue_rate)
    if not trace.ops:
        return 0.0

    touches = _touches(trace, distinct=True)
    seq_ids = pl.Series("seq_id", [op.seq_id for op in trace.ops], dtype=pl.Int64)
    epochs = (
        touches.with_columns(
            (seq_ids.gather(touches["op"]) / issue_rate / epoch_cycles)
            .floor()
            .cast(pl.Int64)
            .alias("epoch")
        )
        .group_by("epoch")
        .agg(pl.col("page").n_unique().alias("pages"))
    )
    return float(epochs["pages"].mean())  # type: ignore


def _bin(values: np.ndarray, n_bins: int) -> np.ndarray:
    vmax = int(values.max()) if len(values) else 0
    if vmax == 0:
        return np.zeros(len(values), dtype=np.int64)
    return np.minimum(n_bins - 1, values * n_bins // (vmax + 1))


def affinity_analysis(trace: OpTrace, n_bins: int = 8) -> AffinityProfile:
    """
    Radix and edge-weight profile of the pages of a trace.

    Raises:
        InvalidParameter: If `n_bins < 2`
    """
    if n_bins < 2:
        raise InvalidParameter("n_bins", n_bins, "must be at least 2")

    touches = _touches(trace, distinct=True)
    pages = touches.select("page").unique().sort("page")
    if pages.is_empty():
        return AffinityProfile(n_bins, (0, 0, 0, 0))

    edges = (
        touches.join(touches, on="op", suffix="_other")
        .filter(pl.col("page") < pl.col("page_other"))
        .group_by(["page", "page_other"])
        .len()
        .rename({"page": "a", "page_other": "b", "len": "weight"})
    )
    incident = pl.concat(
        [
            edges.select(pl.col("a").alias("page"), "weight"),
            edges.select(pl.col("b").alias("page"), "weight"),
        ]
    )
    per_page = pages.join(
        incident.group_by("page").agg(
            pl.len().alias("radix"), pl.col("weight").max().alias("strongest")
        ),
        on="page",
        how="left",
    ).fill_null(0)

    radix = per_page["radix"].to_numpy().astype(np.int64)
    strongest = per_page["strongest"].to_numpy().astype(np.int64)
    half = n_bins // 2
    high_radix = _bin(radix, n_bins) >= half
    high_weight = _bin(strongest, n_bins) >= half
    quadrants = np.bincount(high_radix * 2 + high_weight, minlength=4)

    return AffinityProfile(
        n_bins=n_bins,
        quadrant_counts=tuple(int(q) for q in quadrants),  # type: ignore
        per_page_radix=dict(zip(per_page["page"].to_list(), radix.tolist())),
        per_edge_weight={
            (a, b): w for a, b, w in edges.sort(["a", "b"]).iter_rows()
        },
    )
