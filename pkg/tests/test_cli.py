import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from nmpsim.cli import cli
from nmpsim.core import MetricsReport, parse_trace

CONFIG = """
run.technique = ldb
workload.trace = gen:MAC:64
"""


@pytest.fixture()
def config_file(tmp_path: Path) -> Path:
    path = tmp_path / "run.cfg"
    path.write_text(CONFIG)
    return path


def test_gen_trace_writes_a_parsable_trace(tmp_path: Path):
    out = tmp_path / "mac.trace"
    result = CliRunner().invoke(
        cli, ["gen-trace", "--kind", "mac", "--n", "16", "--seed", "2", "--out", str(out)]
    )

    assert result.exit_code == 0, result.output
    assert len(parse_trace(out.read_bytes())) == 16


def test_gen_trace_rejects_bad_size(tmp_path: Path):
    result = CliRunner().invoke(
        cli, ["gen-trace", "--kind", "RD", "--n", "0", "--out", str(tmp_path / "x")]
    )
    assert result.exit_code == 1


@pytest.mark.parametrize(
    "mode,header",
    [("classify", "bin,pages"), ("active", "epoch_cycles,mean_active_pages"), ("affinity", "quadrant")],
)
def test_analyze_modes(tmp_path: Path, mode: str, header: str):
    trace = tmp_path / "km.trace"
    CliRunner().invoke(cli, ["gen-trace", "--kind", "KM_LIKE", "--n", "64", "--out", str(trace)])
    out = tmp_path / "analysis.csv"

    result = CliRunner().invoke(
        cli, ["analyze", "--trace", str(trace), "--mode", mode, "--out", str(out)]
    )

    assert result.exit_code == 0, result.output
    assert result.output.startswith(header)
    assert out.read_text().startswith(header)


def test_analyze_missing_trace(tmp_path: Path):
    result = CliRunner().invoke(
        cli, ["analyze", "--trace", str(tmp_path / "none"), "--mode", "classify"]
    )
    assert result.exit_code == 1


def test_simulate_writes_report_and_metadata(tmp_path: Path, config_file: Path):
    out = tmp_path / "results"
    result = CliRunner().invoke(
        cli, ["simulate", "--config", str(config_file), "--seed", "5", "--out", str(out)]
    )

    assert result.exit_code == 0, result.output
    assert "ldb.none.seed5" in result.output
    run_dir = out / "ldb" / "none" / "seed5"
    report = MetricsReport.from_json((run_dir / "report.json").read_text())
    assert report.ops_completed == 64
    assert json.loads((run_dir / "run_meta.json").read_text())["status"] == "COMPLETED"
    assert (run_dir / "opc_timeline.csv").is_file()


def test_simulate_against_baseline(tmp_path: Path, config_file: Path):
    out = tmp_path / "results"
    CliRunner().invoke(cli, ["simulate", "--config", str(config_file), "--out", str(out)])
    baseline = out / "ldb" / "none" / "seed0" / "report.json"

    result = CliRunner().invoke(
        cli,
        ["simulate", "--config", str(config_file), "--out", str(out), "--baseline", str(baseline)],
    )
    assert "speedup           1.00x vs ldb.none.seed0" in result.output


def test_simulate_with_invalid_config(tmp_path: Path):
    path = tmp_path / "bad.cfg"
    path.write_text("mesh.width = 40\n")
    result = CliRunner().invoke(cli, ["simulate", "--config", str(path), "--out", str(tmp_path)])
    assert result.exit_code == 1


def test_failed_simulation_still_writes_metadata(tmp_path: Path):
    path = tmp_path / "stall.cfg"
    path.write_text("run.max_cycles = 5\nworkload.trace = gen:MAC:64\n")
    result = CliRunner().invoke(cli, ["simulate", "--config", str(path), "--out", str(tmp_path)])

    assert result.exit_code == 1
    meta = json.loads((tmp_path / "bnmp" / "none" / "seed0" / "run_meta.json").read_text())
    assert meta["status"] == "RUN_FAILED"


def test_matrix_prints_one_row_per_config(tmp_path: Path, config_file: Path):
    other = tmp_path / "bnmp.cfg"
    other.write_text("workload.trace = gen:MAC:64\n")

    result = CliRunner().invoke(
        cli,
        ["matrix", "--config", str(config_file), "--config", str(other), "--out", str(tmp_path / "m")],
    )

    assert result.exit_code == 0, result.output
    lines = result.output.strip().splitlines()
    assert lines[0] == "run_id,total_cycles,opc,avg_hops"
    assert [line.split(",")[0] for line in lines[1:]] == ["ldb.none.seed0", "bnmp.none.seed0"]
