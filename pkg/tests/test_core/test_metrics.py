import pytest

from nmpsim.core import (
    EventTally,
    MetricsReport,
    compute_energy,
    compute_utilization,
    format_speedup,
    speedup,
)


def report(cycles: int, **kwargs) -> MetricsReport:
    return MetricsReport(
        run_id="bnmp.none.seed0",
        technique="BNMP",
        remapper="NONE",
        seed=0,
        total_cycles=cycles,
        ops_completed=64,
        opc=64 / cycles,
        avg_hops=1.5,
        **kwargs,
    )


# -----------------------------------------------------------------------------
# Energy
# -----------------------------------------------------------------------------
def test_network_energy_per_bit_hop():
    energy = compute_energy(EventTally(network_bit_hops=512 * 3))
    assert energy.network_nj == pytest.approx(7.68)
    assert energy.total_nj == pytest.approx(7.68)


def test_memory_and_replay_energy():
    energy = compute_energy(EventTally(memory_bits=512, replay_accesses=100))
    assert energy.memory_nj == pytest.approx(6.144)
    assert energy.replay_buffer_nj == pytest.approx(230.0)


def test_total_is_sum_of_components():
    tally = EventTally(*range(1, 10))
    energy = compute_energy(tally)
    parts = energy.model_dump()
    total = parts.pop("total_nj")
    assert total == pytest.approx(sum(parts.values()))


def test_zero_tally_costs_nothing():
    assert compute_energy(EventTally()).total_nj == 0.0


def test_tallies_add_fieldwise():
    total = EventTally(network_bit_hops=1, state_accesses=2) + EventTally(network_bit_hops=3)
    assert total == EventTally(network_bit_hops=4, state_accesses=2)


# -----------------------------------------------------------------------------
# Utilization and speedup
# -----------------------------------------------------------------------------
@pytest.mark.parametrize(
    "completions,expected",
    [([4, 2, 2, 0], 0.5), ([3, 3, 3, 3], 1.0), ([8, 0, 0, 0], 0.25), ([0, 0], None), ([], None)],
)
def test_compute_utilization(completions: list[int], expected: float | None):
    assert compute_utilization(completions) == expected


def test_speedup_against_baseline():
    assert format_speedup(speedup(report(50), report(100))) == "2.00x"
    assert format_speedup(speedup(report(100), report(100))) == "1.00x"


def test_report_json_is_stable():
    first = report(100, per_cube_completions=[1, 2])
    restored = MetricsReport.from_json(first.to_json())
    assert restored == first
    assert restored.to_json() == first.to_json()
