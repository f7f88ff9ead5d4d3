import pytest

from nmpsim.core import (
    AgentConfig,
    ConfigValidationError,
    MetricsReport,
    RemapperKind,
    RunMetaData,
    RunStatus,
    SimConfig,
    SimulationStalled,
    Technique,
    TomConfig,
)
from nmpsim.extensions.runners import (
    ProcessPoolRunner,
    SimpleRunner,
    run_multiprogram,
    run_simulation,
    simulate,
)


def fake_simulate(config: SimConfig) -> MetricsReport:
    return MetricsReport(
        run_id=f"fake.seed{config.seed}",
        technique=config.technique.value,
        remapper=config.remapper.value,
        seed=config.seed,
        total_cycles=10,
        ops_completed=1,
        opc=0.1,
        avg_hops=0.0,
    )


# -----------------------------------------------------------------------------
# Episodes
# -----------------------------------------------------------------------------
def test_simulate_completes_and_reports():
    config = SimConfig(traces=["gen:MAC:64"], repeats=2)
    meta = RunMetaData(run_id="bnmp.none.seed0")
    run = simulate(config, meta=meta)

    assert run.run_id == "bnmp.none.seed0"
    assert run.report.ops_completed == 64
    assert [s.repeat for s in run.report.per_repeat] == [0, 1]
    assert run.report.per_repeat[0].total_cycles == run.report.per_repeat[1].total_cycles
    assert run.report.energy.total_nj > 0
    assert meta.status == RunStatus.COMPLETED
    assert meta.repeats_done == 2
    assert run.training_log == []


@pytest.mark.parametrize("technique", list(Technique))
@pytest.mark.parametrize("remapper", list(RemapperKind))
def test_report_is_byte_identical_across_reruns(technique: Technique, remapper: RemapperKind):
    config = SimConfig(
        traces=["gen:SPMV_LIKE:256:4"],
        technique=technique,
        remapper=remapper,
        agent=AgentConfig(hidden=32, async_training=False),
        tom=TomConfig(epoch_cycles=200),
        repeats=2,
        seed=4,
    )
    first, second = simulate(config), simulate(config)
    assert first.report.to_json() == second.report.to_json()
    assert first.training_log == second.training_log


def test_workload_failure_marks_initialization_failed():
    meta = RunMetaData(run_id="r")
    with pytest.raises(ConfigValidationError):
        simulate(SimConfig(traces=["gen:MAC"]), meta=meta)
    assert meta.status == RunStatus.INITIALIZING_FAILED
    assert meta.log


def test_stalled_run_marks_run_failed():
    meta = RunMetaData(run_id="r")
    with pytest.raises(SimulationStalled):
        simulate(SimConfig(traces=["gen:MAC:64"], max_cycles=5), meta=meta)
    assert meta.status == RunStatus.RUN_FAILED
    assert meta.has_error()


def test_multiprogram_needs_two_traces():
    with pytest.raises(ConfigValidationError):
        run_multiprogram(SimConfig(traces=["gen:MAC:8"]))


def test_multiprogram_run():
    report = run_multiprogram(SimConfig(traces=["gen:MAC:32", "gen:KM_LIKE:32:1"]))
    assert report.ops_completed == 64


# -----------------------------------------------------------------------------
# Runners
# -----------------------------------------------------------------------------
def test_simple_runner_keeps_order():
    configs = [SimConfig(seed=s) for s in (3, 1, 2)]
    reports = SimpleRunner(fake_simulate).run_matrix(configs)
    assert [r.seed for r in reports] == [3, 1, 2]


def test_process_pool_runner_matches_simple_runner():
    configs = [
        SimConfig(traces=["gen:MAC:32"], technique=t) for t in (Technique.BNMP, Technique.LDB)
    ]
    pooled = ProcessPoolRunner(run_simulation, workers=2).run_matrix(configs)
    simple = SimpleRunner().run_matrix(configs)
    assert [r.to_json() for r in pooled] == [r.to_json() for r in simple]
