import numpy as np
import pytest

from nmpsim.core import (
    Action,
    Agent,
    AgentConfig,
    Experience,
    MeshConfig,
    PageInfoEntry,
    PageView,
    QNetwork,
    ReplayBuffer,
    ShapeMismatch,
    StateEncoder,
    SystemCounters,
    TrainingDiverged,
    apply_action,
    compute_reward,
    q_forward,
    select_action,
    train_step,
)
from nmpsim.core.agent import N_ACTIONS, PARAMETERS, epsilon_at

MESH = MeshConfig()


def small_net(seed: int = 0) -> QNetwork:
    return QNetwork(3, hidden=5, rng=np.random.default_rng(seed))


def random_net(seed: int) -> QNetwork:
    """Every parameter drawn at random, advantage head included."""
    net = QNetwork(3, hidden=5)
    net.load_flat(np.random.default_rng(seed).normal(size=net.parameter_count))
    return net


def states_away_from_kinks(net: QNetwork, rng: np.random.Generator, batch: int = 6) -> np.ndarray:
    while True:
        states = rng.normal(size=(batch, net.inputs))
        _, z1, _, z2, _ = net._forward(states)
        if min(np.abs(z1).min(), np.abs(z2).min()) > 1e-2:
            return states


class RecordingContext:
    def __init__(self, interval: int = 100) -> None:
        self.mesh = MESH
        self.interval = interval
        self.migrations: list[tuple[int, int]] = []
        self.remaps: list[tuple[int, int]] = []

    def request_migration(self, page: int, dst_cube: int) -> object:
        self.migrations.append((page, dst_cube))
        return None

    def set_compute_remap(self, page: int, cube: int) -> None:
        self.remaps.append((page, cube))


# -----------------------------------------------------------------------------
# Q-network
# -----------------------------------------------------------------------------
def test_forward_shapes():
    net = small_net()
    assert q_forward(net, np.ones(3)).shape == (N_ACTIONS,)
    assert net.forward(np.ones((5, 3))).shape == (5, N_ACTIONS)


def test_forward_rejects_wrong_state_length():
    with pytest.raises(ShapeMismatch):
        small_net().forward(np.ones(4))


def test_dueling_head_ignores_advantage_offset():
    net = small_net()
    state = np.array([0.2, 0.5, 0.9])
    before = net.forward(state)
    net.params["ba"] = net.params["ba"] + 3.0
    np.testing.assert_allclose(net.forward(state), before)


@pytest.mark.parametrize("seed", range(100))
def test_dueling_head_ignores_uniform_advantage_shift(seed: int):
    net = random_net(seed)
    rng = np.random.default_rng(1000 + seed)
    states = rng.normal(size=(4, 3))
    before = net.forward(states)

    net.params["ba"] = net.params["ba"] + rng.normal() * 10.0
    net.params["wa"] = net.params["wa"] + rng.normal(size=(net.hidden, 1))

    np.testing.assert_allclose(net.forward(states), before, rtol=0.0, atol=1e-6)


@pytest.mark.parametrize("seed", range(100))
def test_gradients_match_finite_differences(seed: int):
    net = random_net(seed)
    rng = np.random.default_rng(500 + seed)
    states = states_away_from_kinks(net, rng)
    actions = rng.integers(0, N_ACTIONS, len(states))
    targets = rng.normal(size=len(states))

    _, grads = net.loss_and_gradients(states, actions, targets)
    analytic = np.concatenate([grads[name].ravel() for name in PARAMETERS])

    step = 1e-4
    flat = net.flat()
    numeric = np.empty_like(flat)
    for index in range(flat.size):
        shifted = flat.copy()
        shifted[index] = flat[index] + step
        net.load_flat(shifted)
        up, _ = net.loss_and_gradients(states, actions, targets)
        shifted[index] = flat[index] - step
        net.load_flat(shifted)
        down, _ = net.loss_and_gradients(states, actions, targets)
        numeric[index] = (up - down) / (2 * step)

    scale = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    assert scale > 0.0
    assert np.linalg.norm(analytic - numeric) / scale <= 1e-3


def test_flat_parameters_restore_a_network():
    net = small_net(seed=2)
    other = QNetwork(3, hidden=5)
    other.load_flat(net.flat())
    np.testing.assert_array_equal(other.forward(np.ones(3)), net.forward(np.ones(3)))


def test_load_flat_rejects_wrong_size():
    with pytest.raises(ShapeMismatch):
        small_net().load_flat(np.zeros(3))


def test_training_reduces_loss_on_fixed_batch():
    net = small_net(seed=3)
    target = QNetwork(3, hidden=5)
    rng = np.random.default_rng(0)
    batch = [
        Experience(rng.random(3), int(rng.integers(N_ACTIONS)), int(rng.integers(-1, 2)), rng.random(3))
        for _ in range(8)
    ]

    losses = [train_step(net, target, batch, gamma=0.95, learning_rate=1e-3) for _ in range(101)]

    assert all(b <= a + 1e-9 for a, b in zip(losses, losses[1:]))
    assert losses[-1] < losses[0]


def test_non_finite_loss_halts_training():
    net = small_net()
    net.params["bv"] = np.array([np.nan])
    batch = [Experience(np.ones(3), 0, 1, np.ones(3))]
    with pytest.raises(TrainingDiverged):
        train_step(net, QNetwork(3, hidden=5), batch, 0.95, 0.01)


# -----------------------------------------------------------------------------
# Policy and reward
# -----------------------------------------------------------------------------
@pytest.mark.parametrize(
    "prev,cur,reward",
    [(1.0, 1.1, 1), (1.0, 0.9, -1), (1.0, 1.0005, 0), (1.0, 0.9995, 0), (0.0, 0.0, 0)],
)
def test_reward_sign(prev: float, cur: float, reward: int):
    assert compute_reward(prev, cur) == reward


def test_epsilon_decays_linearly():
    config = AgentConfig(epsilon_decay_ticks=100)
    assert epsilon_at(config, 0) == 1.0
    assert epsilon_at(config, 50) == pytest.approx(0.525)
    assert epsilon_at(config, 100) == pytest.approx(0.05)
    assert epsilon_at(config, 10_000) == pytest.approx(0.05)


def test_epsilon_follows_finished_episodes():
    config = AgentConfig(epsilon_decay_ticks=10_000, epsilon_decay_episodes=4)
    assert epsilon_at(config, 0, episode=0) == 1.0
    assert epsilon_at(config, 0, episode=2) == pytest.approx(0.525)
    assert epsilon_at(config, 10, episode=4) == pytest.approx(0.05)
    assert epsilon_at(config, 7_500, episode=1) == pytest.approx(1.0 - 0.95 * 0.75)


def test_episode_schedule_can_be_disabled():
    config = AgentConfig(epsilon_decay_ticks=100, epsilon_decay_episodes=0)
    assert epsilon_at(config, 0, episode=50) == 1.0


def test_greedy_ties_pick_lowest_action():
    net = QNetwork(3, hidden=5)
    action = select_action(net, np.zeros(3), 0.0, np.random.default_rng(0))
    assert action == Action.DEFAULT_MAPPING


def test_untrained_network_greedily_keeps_default_mapping():
    net = small_net(seed=11)
    rng = np.random.default_rng(0)
    for _ in range(50):
        assert select_action(net, rng.normal(size=3), 0.0, rng) == Action.DEFAULT_MAPPING


def test_full_exploration_is_uniform_over_actions():
    rng = np.random.default_rng(0)
    net = small_net()
    draws = 80_000
    counts = np.bincount(
        [select_action(net, np.ones(3), 1.0, rng) for _ in range(draws)], minlength=N_ACTIONS
    )
    np.testing.assert_allclose(counts / draws, 1.0 / N_ACTIONS, atol=0.01)


# -----------------------------------------------------------------------------
# Replay
# -----------------------------------------------------------------------------
def test_replay_ring_overwrites_oldest():
    replay = ReplayBuffer(3, np.random.default_rng(0))
    for reward in range(5):
        replay.push(Experience(np.zeros(1), 0, reward, np.zeros(1)))

    assert len(replay) == 3
    rewards = sorted(e.reward for e in replay.sample(3))
    assert rewards == [2, 3, 4]


def test_replay_sample_is_without_replacement():
    replay = ReplayBuffer(16, np.random.default_rng(0))
    for reward in range(10):
        replay.push(Experience(np.zeros(1), 0, reward, np.zeros(1)))
    sample = replay.sample(32)
    assert len(sample) == 10
    assert len({e.reward for e in sample}) == 10


# -----------------------------------------------------------------------------
# State encoding
# -----------------------------------------------------------------------------
def test_state_vector_layout():
    encoder = StateEncoder(MESH, 4, 4, (100, 125, 167, 250))
    entry = PageInfoEntry(7)
    entry.access_count = 1000
    entry.hop_history.extend([2, 9])
    entry.last_compute_cube = 5
    view = PageView(entry, host_cube=3, read_only=True, remap_target=15)

    state = encoder.encode(SystemCounters(16, 4), view, [1, 2], [0.0] * 16, 125)

    assert encoder.length == 7 * 16 + 4 + 5 * 4 + 4 + 4
    assert state.shape == (encoder.length,)
    assert state.min() >= 0.0 and state.max() <= 1.0
    tail = state[-64:]
    assert tail[3] == 1.0
    assert tail[16 + 5] == 1.0
    assert tail[32 + 3] == 1.0
    assert tail[48 + 15] == 1.0


# -----------------------------------------------------------------------------
# Actions
# -----------------------------------------------------------------------------
def view(compute: int = 0, src1: int | None = None) -> PageView:
    entry = PageInfoEntry(42)
    entry.last_compute_cube = compute
    entry.last_src1_cube = src1
    return PageView(entry, host_cube=compute)


def test_far_data_remap_migrates_to_diagonal():
    context = RecordingContext()
    effect = apply_action(Action.FAR_DATA_REMAP, view(0), context, np.random.default_rng(0), (100, 125, 167, 250))
    assert context.migrations == [(42, 15)]
    assert effect.target_cube == 15


def test_near_compute_remap_targets_a_neighbour():
    context = RecordingContext()
    apply_action(Action.NEAR_COMPUTE_REMAP, view(5), context, np.random.default_rng(0), (100, 125, 167, 250))
    (page, cube), = context.remaps
    assert page == 42 and cube in MESH.neighbors(5)


def test_source_compute_remap_uses_first_source_cube():
    context = RecordingContext()
    apply_action(Action.SOURCE_COMPUTE_REMAP, view(5, src1=9), context, np.random.default_rng(0), (100, 125, 167, 250))
    assert context.remaps == [(42, 9)]


def test_default_mapping_changes_nothing():
    context = RecordingContext()
    effect = apply_action(Action.DEFAULT_MAPPING, view(), context, np.random.default_rng(0), (100, 125, 167, 250))
    assert context.migrations == [] and context.remaps == []
    assert effect.target_cube is None


@pytest.mark.parametrize(
    "action,start,end",
    [
        (Action.INCREASE_INTERVAL, 100, 125),
        (Action.INCREASE_INTERVAL, 250, 250),
        (Action.DECREASE_INTERVAL, 125, 100),
        (Action.DECREASE_INTERVAL, 100, 100),
    ],
)
def test_interval_actions_clamp(action: Action, start: int, end: int):
    context = RecordingContext(start)
    effect = apply_action(action, view(), context, np.random.default_rng(0), (100, 125, 167, 250))
    assert context.interval == end
    assert effect.interval == end


# -----------------------------------------------------------------------------
# Agent
# -----------------------------------------------------------------------------
def play(agent: Agent, steps: int) -> list[Action]:
    rng = np.random.default_rng(9)
    actions = []
    for k in range(steps):
        actions.append(agent.step(rng.random(3), opc=float(k % 3), interval=100))
    agent.end_episode(None, 1.0)
    return actions


def test_agent_is_deterministic_per_seed():
    config = AgentConfig(hidden=8, batch_size=4, train_period=2)
    a, b = Agent(config, 3, seed=5), Agent(config, 3, seed=5)

    assert play(a, 30) == play(b, 30)
    np.testing.assert_array_equal(a.net.flat(), b.net.flat())
    assert a.train_steps == b.train_steps > 0


def test_agent_records_rewards_and_training_log():
    agent = Agent(AgentConfig(hidden=8, batch_size=4, train_period=2), 3, seed=0)
    play(agent, 10)

    assert len(agent.training_log) == 10
    assert agent.training_log[0].reward is None
    assert all(row.reward in (-1, 0, 1) for row in agent.training_log[1:])
    assert len(agent.replay) == 10
    assert agent.inferences == 10


def test_begin_episode_clears_replay_unless_kept():
    agent = Agent(AgentConfig(hidden=8), 3, seed=0)
    play(agent, 5)
    agent.begin_episode()
    assert len(agent.replay) == 0

    keeper = Agent(AgentConfig(hidden=8, keep_replay=True), 3, seed=0)
    play(keeper, 5)
    keeper.begin_episode()
    assert len(keeper.replay) == 5


def test_background_training_applies_updates():
    agent = Agent(AgentConfig(hidden=8, batch_size=4, train_period=1, async_training=True), 3, seed=0)
    before = agent.net.flat()
    play(agent, 8)
    agent.close()

    assert agent.train_steps > 0
    assert not np.array_equal(before, agent.net.flat())


def test_training_waits_for_a_full_batch():
    agent = Agent(AgentConfig(hidden=8, batch_size=8, train_period=1), 3, seed=0)
    rng = np.random.default_rng(3)
    for k in range(8):
        agent.step(rng.random(3), opc=float(k), interval=100)
    assert agent.train_steps == 0

    agent.step(rng.random(3), opc=9.0, interval=100)
    assert agent.train_steps == 1


def test_exploration_ends_after_the_decay_episodes():
    agent = Agent(AgentConfig(hidden=8, epsilon_decay_episodes=4), 3, seed=0)
    assert agent.epsilon == 1.0
    for _ in range(4):
        agent.begin_episode()
        play(agent, 3)
    assert agent.episodes == 4
    assert agent.epsilon == pytest.approx(0.05)
