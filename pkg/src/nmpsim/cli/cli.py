#!/usr/bin/env python3

import logging
import os
import sys

import click
import polars as pl
import smart_open as so  # type: ignore

from ..core import (
    NMPSIM_LOG_LEVEL_ENV_KEY,
    KernelKind,
    MetricsReport,
    RunId,
    RunMetaData,
    active_page_distribution,
    affinity_analysis,
    classify_page_accesses,
    generate_kernel_trace,
    parse_trace,
    read_config,
    serialize_trace,
)
from ..extensions.reporters import emit_report, summary_text
from ..extensions.resources import LocalFolder
from ..extensions.runners import ProcessPoolRunner, SimpleRunner, simulate as run_config

logging.basicConfig(level=os.environ.get(NMPSIM_LOG_LEVEL_ENV_KEY, "INFO").upper())


def _fail(message: str) -> None:
    logging.error(message)
    sys.exit(1)


@click.group()
def cli():
    pass


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override run.seed")
@click.option("--out", default="results", type=click.Path(file_okay=False))
@click.option("--baseline", default=None, type=click.Path(dir_okay=False))
@click.option("--events", is_flag=True, help="Keep network and migration event logs")
def simulate(
    config_path: str, seed: int | None, out: str, baseline: str | None, events: bool
) -> None:
    try:
        config = read_config(config_path)
    except Exception as e:
        _fail(f"cannot load configuration {config_path}: {e}")
        return

    updates: dict[str, object] = {}
    if seed is not None:
        updates["seed"] = seed
    if events:
        updates["events"] = True
    config = config.model_copy(update=updates)

    reference: MetricsReport | None = None
    if baseline is not None:
        with so.open(baseline, "r") as f:
            reference = MetricsReport.from_json(f.read())

    folder = LocalFolder(out)
    run_id = RunId.build(config.technique, config.remapper, config.seed)
    meta = RunMetaData(run_id=run_id)
    try:
        run = run_config(config, meta=meta)
    except Exception as e:
        _fail(f"simulation {run_id} failed: {e}")
        return
    finally:
        with folder.open(run_id.file("run_meta.json"), "w") as f:
            f.write(meta.to_json())

    emit_report(
        run.report,
        folder,
        baseline=reference,
        final=run.final,
        training_log=run.training_log,
    )
    click.echo(summary_text(run.report, reference), nl=False)


@cli.command("gen-trace")
@click.option(
    "--kind",
    required=True,
    type=click.Choice([k.value for k in KernelKind], case_sensitive=False),
)
@click.option("--n", "size", required=True, type=int, help="Elements of the kernel")
@click.option("--seed", type=int, default=0)
@click.option("--pid", type=int, default=0, help="Process id of the ops")
@click.option("--page-size", type=int, default=4096)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def gen_trace(kind: str, size: int, seed: int, pid: int, page_size: int, out: str) -> None:
    try:
        trace = generate_kernel_trace(
            KernelKind(kind.upper()), size, seed, process_id=pid, page_size=page_size
        )
    except Exception as e:
        _fail(str(e))
        return
    with so.open(out, "wb") as f:
        f.write(serialize_trace(trace))
    logging.info("wrote %s ops to %s", len(trace), out)


@cli.command()
@click.option("--trace", "trace_path", required=True, type=click.Path(dir_okay=False))
@click.option(
    "--mode",
    required=True,
    type=click.Choice(["classify", "active", "affinity"], case_sensitive=False),
)
@click.option("--bins", default="1,2,4,8,16,32,64", help="Ascending access-count bin edges")
@click.option("--epoch", type=int, default=1000, help="Epoch length in cycles")
@click.option("--issue-rate", type=float, default=1.0, help="Ops issued per cycle")
@click.option("--n-bins", type=int, default=8, help="Radix and weight bins")
@click.option("--out", default=None, type=click.Path(dir_okay=False), help="CSV output")
def analyze(
    trace_path: str,
    mode: str,
    bins: str,
    epoch: int,
    issue_rate: float,
    n_bins: int,
    out: str | None,
) -> None:
    try:
        with so.open(trace_path, "rb") as f:
            trace = parse_trace(f.read())

        match mode.lower():
            case "classify":
                edges = [int(b) for b in bins.split(",")]
                frame = classify_page_accesses(trace, edges)
            case "active":
                value = active_page_distribution(trace, epoch, issue_rate)
                frame = pl.DataFrame({"epoch_cycles": [epoch], "mean_active_pages": [value]})
            case _:
                frame = affinity_analysis(trace, n_bins).to_frame()
    except Exception as e:
        _fail(f"cannot analyze {trace_path}: {e}")
        return

    if out is not None:
        with so.open(out, "wb") as f:
            frame.write_csv(f)
    click.echo(frame.write_csv())


@cli.command()
@click.option("--config", "config_paths", required=True, multiple=True, type=click.Path(dir_okay=False))
@click.option("--workers", type=int, default=1)
@click.option("--out", default="results", type=click.Path(file_okay=False))
def matrix(config_paths: tuple[str, ...], workers: int, out: str) -> None:
    try:
        configs = [read_config(p) for p in config_paths]
    except Exception as e:
        _fail(str(e))
        return

    runner = SimpleRunner() if workers <= 1 else ProcessPoolRunner(workers=workers)
    try:
        reports = runner.run_matrix(configs)
    except Exception as e:
        _fail(f"run matrix failed: {e}")
        return

    folder = LocalFolder(out)
    for report in reports:
        emit_report(report, folder)
    click.echo(
        pl.DataFrame(
            {
                "run_id": [r.run_id for r in reports],
                "total_cycles": [r.total_cycles for r in reports],
                "opc": [r.opc for r in reports],
                "avg_hops": [r.avg_hops for r in reports],
            }
        ).write_csv()
    )


if __name__ == "__main__":
    cli()
