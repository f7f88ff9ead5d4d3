from __future__ import annotations

import logging
from enum import StrEnum
from pathlib import PurePath
from typing import Sequence

import polars as pl

from ...core.agent import TrainingLogRow
from ...core.metrics import MetricsReport, format_speedup, speedup
from ...core.run_id import RunId
from ...core.simulation import EpisodeResult
from ..resources import FolderResource


class ReportFormat(StrEnum):
    CSV = "CSV"
    SUMMARY = "SUMMARY"


TIMELINE_COLUMNS = [
    "interval",
    "opc",
    "avg_hops",
    "per_cube_completions",
    "row_hit_rate",
    "start_cycle",
    "cycles",
    "ops",
]


def timeline_frame(report: MetricsReport) -> pl.DataFrame:
    """
    One row per OPC interval; per-cube completions are `;`-joined.
    """
    return pl.DataFrame(
        {
            "interval": [r.interval for r in report.timeline],
            "opc": [r.opc for r in report.timeline],
            "avg_hops": [r.avg_hops for r in report.timeline],
            "per_cube_completions": [
                ";".join(str(c) for c in r.per_cube_completions) for r in report.timeline
            ],
            "row_hit_rate": [r.row_hit_rate for r in report.timeline],
            "start_cycle": [r.start_cycle for r in report.timeline],
            "cycles": [r.cycles for r in report.timeline],
            "ops": [r.ops for r in report.timeline],
        },
        schema={
            "interval": pl.Int64,
            "opc": pl.Float64,
            "avg_hops": pl.Float64,
            "per_cube_completions": pl.String,
            "row_hit_rate": pl.Float64,
            "start_cycle": pl.Int64,
            "cycles": pl.Int64,
            "ops": pl.Int64,
        },
    )


def per_cube_frame(report: MetricsReport) -> pl.DataFrame:
    return pl.DataFrame(
        {
            "cube": list(range(len(report.per_cube_completions))),
            "completions": report.per_cube_completions,
            "row_hit_rate": report.per_cube_row_hit_rate,
        },
        schema={"cube": pl.Int64, "completions": pl.Int64, "row_hit_rate": pl.Float64},
    )


def per_repeat_frame(report: MetricsReport) -> pl.DataFrame:
    return pl.DataFrame(
        [s.model_dump() for s in report.per_repeat],
        schema={
            "repeat": pl.Int64,
            "total_cycles": pl.Int64,
            "ops_completed": pl.Int64,
            "opc": pl.Float64,
            "avg_hops": pl.Float64,
            "migrations": pl.Int64,
        },
    )


def energy_frame(report: MetricsReport) -> pl.DataFrame:
    energy = report.energy.model_dump()
    return pl.DataFrame(
        {"component": list(energy), "nj": list(energy.values())},
        schema={"component": pl.String, "nj": pl.Float64},
    )


def migrations_frame(final: EpisodeResult) -> pl.DataFrame:
    return pl.DataFrame(
        final.migration_events,
        schema={
            "vpage": pl.Int64,
            "src_cube": pl.Int64,
            "dst_cube": pl.Int64,
            "mode": pl.String,
            "start": pl.Int64,
            "end": pl.Int64,
            "aborted": pl.Boolean,
        },
        orient="row",
    )


def events_frame(final: EpisodeResult) -> pl.DataFrame:
    return pl.DataFrame(
        final.network_events,
        schema={
            "cycle": pl.Int64,
            "event": pl.String,
            "packet_id": pl.Int64,
            "cube": pl.Int64,
        },
        orient="row",
    )


def training_log_frame(rows: Sequence[TrainingLogRow]) -> pl.DataFrame:
    return pl.DataFrame(
        [
            (r.tick, r.epsilon, r.loss, r.reward, r.action, r.interval)
            for r in rows
        ],
        schema={
            "tick": pl.Int64,
            "epsilon": pl.Float64,
            "loss": pl.Float64,
            "reward": pl.Int64,
            "action": pl.Int64,
            "interval": pl.Int64,
        },
        orient="row",
    )


def summary_text(report: MetricsReport, baseline: MetricsReport | None = None) -> str:
    utilization = (
        "n/a" if report.compute_utilization is None else f"{report.compute_utilization:.4f}"
    )
    lines = [
        f"run               {report.run_id}",
        f"technique         {report.technique}",
        f"remapper          {report.remapper}",
        f"cycles            {report.total_cycles}",
        f"ops completed     {report.ops_completed}",
        f"OPC               {report.opc:.6f}",
        f"avg hops          {report.avg_hops:.4f}",
        f"utilization       {utilization}",
        f"row hit rate      {report.row_hit_rate:.4f}",
        f"migrations        {report.migrations.completed} of {report.migrations.requested} requested",
        f"pages migrated    {report.migrations.pages_migrated_fraction:.4f}",
        f"energy (nJ)       {report.energy.total_nj:.3f}",
    ]
    if baseline is not None:
        lines.append(
            f"speedup           {format_speedup(speedup(report, baseline))} vs {baseline.run_id}"
        )
    return "\n".join(lines) + "\n"


def _write_csv(folder: FolderResource, path: PurePath, frame: pl.DataFrame) -> PurePath:
    with folder.open(path, "wb") as f:
        frame.write_csv(f)
    return path


def emit_report(
    report: MetricsReport,
    folder: FolderResource,
    formats: Sequence[ReportFormat] = (ReportFormat.CSV, ReportFormat.SUMMARY),
    baseline: MetricsReport | None = None,
    final: EpisodeResult | None = None,
    training_log: Sequence[TrainingLogRow] = (),
) -> list[PurePath]:
    """
    Write the report files under the run's folder.

    CSV: `opc_timeline.csv`, `per_cube.csv`, `per_repeat.csv`, `energy.csv`, and with the final
    episode's logs `migrations.csv` and `events.csv`, plus `training_log.csv` for agent runs.
    SUMMARY: `summary.txt` and `report.json`.

    Returns:
        list[PurePath]: The written paths, relative to `folder`
    """
    run_id = RunId(report.run_id)
    written: list[PurePath] = []

    if ReportFormat.CSV in formats:
        written.append(_write_csv(folder, run_id.file("opc_timeline.csv"), timeline_frame(report)))
        written.append(_write_csv(folder, run_id.file("per_cube.csv"), per_cube_frame(report)))
        written.append(
            _write_csv(folder, run_id.file("per_repeat.csv"), per_repeat_frame(report))
        )
        written.append(_write_csv(folder, run_id.file("energy.csv"), energy_frame(report)))
        if final is not None:
            written.append(
                _write_csv(folder, run_id.file("migrations.csv"), migrations_frame(final))
            )
            written.append(_write_csv(folder, run_id.file("events.csv"), events_frame(final)))
        if training_log:
            written.append(
                _write_csv(
                    folder, run_id.file("training_log.csv"), training_log_frame(training_log)
                )
            )

    if ReportFormat.SUMMARY in formats:
        with folder.open(run_id.file("summary.txt"), "w") as f:
            f.write(summary_text(report, baseline))
        written.append(run_id.file("summary.txt"))
        with folder.open(run_id.file("report.json"), "w") as f:
            f.write(report.to_json())
        written.append(run_id.file("report.json"))

    logging.info("wrote %s report files for %s", len(written), run_id)
    return written
