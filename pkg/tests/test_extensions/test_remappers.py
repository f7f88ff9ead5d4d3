import random
from pathlib import PurePath

import pytest

from nmpsim.core import (
    AgentConfig,
    CubeConfig,
    KernelKind,
    MeshConfig,
    RemapperKind,
    Role,
    SimConfig,
    Simulator,
    Technique,
    TomConfig,
    generate_kernel_trace,
    tom_candidates,
)
from nmpsim.extensions.remappers import (
    AimmRemapper,
    NoRemapper,
    TomRemapper,
    movement_score,
    tom_epoch_select,
)
from nmpsim.extensions.resources import InMemoryFolder
from nmpsim.extensions.runners import build_allocator, build_scheduler

MESH = MeshConfig()
CUBE = CubeConfig(capacity_bytes=1 << 20)
PAGE = 4096
CANDIDATES = tom_candidates(MESH, CUBE, PAGE, 8)


def brute_force(window, compute_index: int, candidates=CANDIDATES) -> int:
    best, best_score = 0, None
    for k, mapping in enumerate(candidates):
        score = 0
        for paddrs in window:
            cx, cy = MESH.coord(mapping.map(paddrs[compute_index]).cube)
            for paddr in paddrs:
                x, y = MESH.coord(mapping.map(paddr).cube)
                score += 64 * (abs(x - cx) + abs(y - cy))
        if best_score is None or score < best_score:
            best, best_score = k, score
    return best


# -----------------------------------------------------------------------------
# TOM
# -----------------------------------------------------------------------------
def test_identity_wins_for_adjacent_frames():
    window = [(0 * PAGE, 1 * PAGE)]
    assert movement_score(window, CANDIDATES[0], MESH) == 0
    assert tom_epoch_select(window, CANDIDATES, MESH) == 0


def test_swap_wins_when_it_collocates_operands():
    # frame 256 is the first frame of cube 1; the bit-0 swap maps it next to frame 0
    window = [(0, 256 * PAGE)]
    assert movement_score(window, CANDIDATES[0], MESH) == 64
    assert movement_score(window, CANDIDATES[1], MESH) == 0
    assert tom_epoch_select(window, CANDIDATES, MESH) == 1


def test_empty_window_keeps_current_mapping():
    assert tom_epoch_select([], CANDIDATES, MESH, current=3) == 3


def test_ties_go_to_lowest_index():
    window = [(0, PAGE)]
    assert tom_epoch_select(window, [CANDIDATES[0], CANDIDATES[0]], MESH) == 0


@pytest.mark.parametrize("role,index", [(Role.DEST, 0), (Role.SRC1, 1)])
def test_selection_matches_brute_force(role: Role, index: int):
    frames = CANDIDATES[0].total_frames
    for seed in range(100):
        rng = random.Random(seed)
        window = [
            tuple(rng.randrange(frames) * PAGE + rng.randrange(PAGE) for _ in range(3))
            for _ in range(20)
        ]
        for candidates in (CANDIDATES[:3], CANDIDATES):
            chosen = tom_epoch_select(window, candidates, MESH, compute_role=role)
            assert chosen == brute_force(window, index, candidates)


def test_tom_remapper_switches_during_a_run():
    config = SimConfig(
        cube=CUBE,
        remapper=RemapperKind.TOM,
        tom=TomConfig(epoch_cycles=50),
    )
    trace = generate_kernel_trace(KernelKind.SPMV_LIKE, 512, seed=0)
    remapper = TomRemapper(config)
    sim = Simulator(config, trace, build_scheduler(config), remapper, build_allocator(config, PAGE))
    result = sim.run()

    assert result.ops_completed == len(trace)
    assert remapper.compute_role == Role.DEST
    assert sim.mapping is remapper.candidates[remapper.current]


def test_tom_uses_first_source_for_ldb():
    assert TomRemapper(SimConfig(technique=Technique.LDB)).compute_role == Role.SRC1


# -----------------------------------------------------------------------------
# AIMM
# -----------------------------------------------------------------------------
def aimm_config(**agent) -> SimConfig:
    return SimConfig(
        remapper=RemapperKind.AIMM,
        agent=AgentConfig(hidden=16, batch_size=8, **agent),
        seed=1,
    )


def run_aimm(config: SimConfig, remapper: AimmRemapper, repeat: int = 0):
    trace = generate_kernel_trace(KernelKind.MAC, 256, seed=0)
    sim = Simulator(
        config, trace, build_scheduler(config), remapper, build_allocator(config, PAGE), repeat
    )
    return sim, sim.run()


def test_aimm_acts_every_interval():
    config = aimm_config()
    remapper = AimmRemapper(config)
    sim, result = run_aimm(config, remapper)

    assert result.ops_completed == 256
    decisions = sum(remapper.actions.values())
    assert decisions + remapper.skipped == len(result.timeline) - 1
    assert remapper.agent.ticks == decisions > 0
    assert sim.interval in config.agent.intervals


def test_aimm_tally_counts_agent_hardware():
    config = aimm_config()
    remapper = AimmRemapper(config)
    run_aimm(config, remapper)
    tally = remapper.tally()

    inferences = remapper.agent.inferences
    steps = remapper.agent.train_steps
    assert tally.weight_accesses == inferences + 3 * steps * 8
    assert tally.state_accesses == inferences
    assert tally.replay_accesses == remapper.agent.replay.accesses


def test_aimm_network_survives_repeats():
    config = aimm_config()
    remapper = AimmRemapper(config)
    run_aimm(config, remapper, 0)
    ticks = remapper.agent.ticks
    run_aimm(config, remapper, 1)

    assert remapper.agent.ticks > ticks
    # per-episode counts restart with every repeat
    assert remapper.tally().state_accesses < remapper.agent.ticks


def test_untrained_greedy_agent_leaves_placement_alone():
    greedy = SimConfig(
        remapper=RemapperKind.AIMM,
        agent=AgentConfig(hidden=16, epsilon_start=0.0, epsilon_end=0.0, batch_size=4096),
        seed=1,
    )
    remapper = AimmRemapper(greedy)
    _, tuned = run_aimm(greedy, remapper)
    plain = SimConfig(seed=1)
    _, baseline = run_aimm(plain, NoRemapper(plain))

    assert remapper.actions[0] == sum(remapper.actions.values()) > 0
    assert tuned.migrations.completed == 0
    assert (tuned.total_cycles, tuned.avg_hops) == (baseline.total_cycles, baseline.avg_hops)


def test_aimm_runs_are_reproducible():
    config = aimm_config()
    _, first = run_aimm(config, AimmRemapper(config))
    _, second = run_aimm(config, AimmRemapper(config))
    assert first == second


def test_aimm_checkpoint_round_trip():
    folder = InMemoryFolder()
    config = aimm_config(checkpoint="agent.ckpt")
    trained = AimmRemapper(config, folder)
    run_aimm(config, trained)
    assert folder.exists(PurePath("agent.ckpt"))

    restored = AimmRemapper(config, folder)
    assert restored.agent.train_steps == trained.agent.train_steps
    assert restored.agent.ticks == trained.agent.ticks
    assert restored.agent.episodes == trained.agent.episodes == 1
    assert (restored.agent.net.flat() == trained.agent.net.flat()).all()


def test_aimm_checkpoint_in_local_folder(tmp_path):
    config = aimm_config(checkpoint=str(tmp_path / "nets" / "agent.ckpt"))
    run_aimm(config, AimmRemapper(config))
    assert (tmp_path / "nets" / "agent.ckpt").is_file()
