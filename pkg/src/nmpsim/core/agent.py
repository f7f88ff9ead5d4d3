from __future__ import annotations

import logging
from collections import deque
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass
from enum import IntEnum
from typing import Protocol, Sequence

import numpy as np

from .config import AgentConfig, MeshConfig
from .exceptions import ShapeMismatch, TrainingDiverged
from .offload import PageInfoEntry, SystemCounters

N_ACTIONS = 8


class Action(IntEnum):
    DEFAULT_MAPPING = 0
    NEAR_DATA_REMAP = 1
    FAR_DATA_REMAP = 2
    NEAR_COMPUTE_REMAP = 3
    FAR_COMPUTE_REMAP = 4
    SOURCE_COMPUTE_REMAP = 5
    INCREASE_INTERVAL = 6
    DECREASE_INTERVAL = 7


@dataclass(frozen=True)
class Experience:
    state: np.ndarray
    action: int
    reward: int
    next_state: np.ndarray
    terminal: bool = False


# -----------------------------------------------------------------------------
# Q-network
# -----------------------------------------------------------------------------
PARAMETERS = ("w1", "b1", "w2", "b2", "wv", "bv", "wa", "ba")


class QNetwork:
    """
    Dueling Q-network: a two-layer rectified trunk shared by a state-value head and an
    action-advantage head, combined as `Q = V + A - mean(A)`.

    Gradients of the squared TD loss are computed by hand; `apply` performs a plain
    gradient-descent step.

    Args:
        inputs: State vector length
        hidden: Width of both trunk layers
        actions: Number of actions
        rng: Generator for He initialisation of the trunk and value head (all-zero weights when
            None); the advantage head always starts at zero, so an untrained network rates
            every action alike and greedy selection keeps the default mapping
    """

    def __init__(
        self,
        inputs: int,
        hidden: int = 256,
        actions: int = N_ACTIONS,
        rng: np.random.Generator | None = None,
    ) -> None:
        self.inputs = inputs
        self.hidden = hidden
        self.actions = actions
        shapes = self.shapes()
        self.params = {name: np.zeros(shape) for name, shape in shapes.items()}
        if rng is not None:
            for name, fan_in in (("w1", inputs), ("w2", hidden)):
                self.params[name] = rng.normal(0.0, np.sqrt(2.0 / fan_in), shapes[name])
            self.params["wv"] = rng.normal(0.0, np.sqrt(1.0 / hidden), shapes["wv"])

    def shapes(self) -> dict[str, tuple[int, ...]]:
        return {
            "w1": (self.inputs, self.hidden),
            "b1": (self.hidden,),
            "w2": (self.hidden, self.hidden),
            "b2": (self.hidden,),
            "wv": (self.hidden, 1),
            "bv": (1,),
            "wa": (self.hidden, self.actions),
            "ba": (self.actions,),
        }

    def copy(self) -> QNetwork:
        other = QNetwork(self.inputs, self.hidden, self.actions)
        other.params = {k: v.copy() for k, v in self.params.items()}
        return other

    @property
    def parameter_count(self) -> int:
        return sum(v.size for v in self.params.values())

    def flat(self) -> np.ndarray:
        return np.concatenate([self.params[k].ravel() for k in PARAMETERS])

    def load_flat(self, values: np.ndarray) -> None:
        if values.size != self.parameter_count:
            raise ShapeMismatch(self.parameter_count, values.size)
        offset = 0
        for name in PARAMETERS:
            shape = self.shapes()[name]
            size = int(np.prod(shape))
            self.params[name] = values[offset : offset + size].reshape(shape).astype(np.float64)
            offset += size

    def _check(self, states: np.ndarray) -> np.ndarray:
        states = np.asarray(states, dtype=np.float64)
        if states.shape[-1] != self.inputs:
            raise ShapeMismatch(self.inputs, states.shape[-1])
        return states

    def _forward(self, x: np.ndarray) -> tuple[np.ndarray, ...]:
        p = self.params
        z1 = x @ p["w1"] + p["b1"]
        h1 = np.maximum(z1, 0.0)
        z2 = h1 @ p["w2"] + p["b2"]
        h2 = np.maximum(z2, 0.0)
        value = h2 @ p["wv"] + p["bv"]
        advantage = h2 @ p["wa"] + p["ba"]
        q = value + advantage - advantage.mean(axis=1, keepdims=True)
        return q, z1, h1, z2, h2

    def forward(self, states: np.ndarray) -> np.ndarray:
        """
        Q-values of one state (shape `(actions,)`) or a batch (shape `(batch, actions)`).

        Raises:
            ShapeMismatch: If the state length differs from the network input
        """
        states = self._check(states)
        if states.ndim == 1:
            return self._forward(states[None, :])[0][0]
        return self._forward(states)[0]

    def loss_and_gradients(
        self, states: np.ndarray, actions: np.ndarray, targets: np.ndarray
    ) -> tuple[float, dict[str, np.ndarray]]:
        """
        Mean squared error between `targets` and `Q(states, actions)` and its gradients.
        """
        x = self._check(states)
        p = self.params
        batch = x.shape[0]
        rows = np.arange(batch)
        q, z1, h1, z2, h2 = self._forward(x)

        error = targets - q[rows, actions]
        loss = float(np.mean(error**2))

        d_q = np.zeros_like(q)
        d_q[rows, actions] = -2.0 * error / batch
        d_value = d_q.sum(axis=1, keepdims=True)
        d_adv = d_q - d_q.mean(axis=1, keepdims=True)

        grads: dict[str, np.ndarray] = {}
        grads["wv"] = h2.T @ d_value
        grads["bv"] = d_value.sum(axis=0)
        grads["wa"] = h2.T @ d_adv
        grads["ba"] = d_adv.sum(axis=0)
        d_z2 = (d_value @ p["wv"].T + d_adv @ p["wa"].T) * (z2 > 0)
        grads["w2"] = h1.T @ d_z2
        grads["b2"] = d_z2.sum(axis=0)
        d_z1 = (d_z2 @ p["w2"].T) * (z1 > 0)
        grads["w1"] = x.T @ d_z1
        grads["b1"] = d_z1.sum(axis=0)
        return loss, grads

    def apply(self, grads: dict[str, np.ndarray], learning_rate: float) -> None:
        for name, grad in grads.items():
            self.params[name] -= learning_rate * grad


def q_forward(net: QNetwork, state: np.ndarray) -> np.ndarray:
    return net.forward(state)


def td_targets(
    target: QNetwork, batch: Sequence[Experience], gamma: float
) -> np.ndarray:
    """
    `r + gamma * max Q(s', .)` per sample, or `r` for terminal samples.
    """
    rewards = np.array([e.reward for e in batch], dtype=np.float64)
    terminal = np.array([e.terminal for e in batch], dtype=bool)
    next_q = target.forward(np.stack([e.next_state for e in batch])).max(axis=1)
    return np.where(terminal, rewards, rewards + gamma * next_q)


def train_step(
    net: QNetwork,
    target: QNetwork,
    batch: Sequence[Experience],
    gamma: float,
    learning_rate: float,
    step: int = 0,
) -> float:
    """
    One gradient-descent step on a batch; returns the loss before the update.

    Raises:
        TrainingDiverged: If the loss is not finite
    """
    states = np.stack([e.state for e in batch])
    actions = np.array([e.action for e in batch], dtype=np.int64)
    targets = td_targets(target, batch, gamma)
    loss, grads = net.loss_and_gradients(states, actions, targets)
    if not np.isfinite(loss):
        raise TrainingDiverged(step, loss)
    net.apply(grads, learning_rate)
    return loss


# -----------------------------------------------------------------------------
# Policy and reward
# -----------------------------------------------------------------------------
def epsilon_at(config: AgentConfig, tick: int, episode: int = 0) -> float:
    """
    Linearly decayed exploration rate.

    Decays with the ticks taken so far or with the finished episodes, whichever is further
    along; an episode-based schedule reaches `epsilon_end` in the same repeat however long the
    trace is.
    """
    progress = tick / config.epsilon_decay_ticks
    if config.epsilon_decay_episodes > 0:
        progress = max(progress, episode / config.epsilon_decay_episodes)
    progress = min(1.0, progress)
    return config.epsilon_start + (config.epsilon_end - config.epsilon_start) * progress


def select_action(
    net: QNetwork, state: np.ndarray, epsilon: float, rng: np.random.Generator
) -> Action:
    """
    Epsilon-greedy choice; greedy ties go to the lowest action id.
    """
    if rng.random() < epsilon:
        return Action(int(rng.integers(net.actions)))
    return Action(int(np.argmax(net.forward(state))))


def compute_reward(opc_prev: float, opc_cur: float, tolerance: float = 1e-3) -> int:
    if opc_cur > opc_prev * (1.0 + tolerance):
        return 1
    if opc_cur < opc_prev * (1.0 - tolerance):
        return -1
    return 0


class ReplayBuffer:
    """
    Ring buffer of experiences sampled uniformly without replacement within a batch.
    """

    def __init__(self, capacity: int, rng: np.random.Generator) -> None:
        self.capacity = capacity
        self.rng = rng
        self._items: list[Experience] = []
        self._next = 0
        self.accesses = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, experience: Experience) -> None:
        self.accesses += 1
        if len(self._items) < self.capacity:
            self._items.append(experience)
        else:
            self._items[self._next] = experience
        self._next = (self._next + 1) % self.capacity

    def sample(self, batch_size: int) -> list[Experience]:
        size = min(batch_size, len(self._items))
        indices = self.rng.choice(len(self._items), size=size, replace=False)
        self.accesses += size
        return [self._items[int(i)] for i in indices]

    def clear(self) -> None:
        self._items.clear()
        self._next = 0


# -----------------------------------------------------------------------------
# State
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class PageView:
    """
    Everything the state encoder needs to know about the candidate page.
    """

    entry: PageInfoEntry
    host_cube: int
    read_only: bool = False
    migrating: bool = False
    remap_target: int | None = None

    @property
    def compute_cube(self) -> int:
        if self.entry.last_compute_cube is None:
            return self.host_cube
        return self.entry.last_compute_cube

    @property
    def src1_cube(self) -> int:
        if self.entry.last_src1_cube is None:
            return self.host_cube
        return self.entry.last_src1_cube


class StateEncoder:
    """
    Flattens system counters and a candidate page into the agent's state vector.

    Layout, with N cubes, M controllers and history length H: NMP-table occupancy [N],
    row-buffer hit rate [N], completion share of the last interval [N], controller queue
    occupancy [M], global action history [H], current interval one-hot [4], page access rate
    and migrations per access [2], read-only and migrating flags [2], page hop, latency,
    migration latency and action histories [4H], and one-hots of the page's host cube, recent
    compute cube, recent first-source cube and compute remap target [4N]. Every entry lies in
    [0, 1]; missing history slots are zero.
    """

    access_norm = 256.0
    latency_norm = 1000.0
    migration_latency_norm = 4000.0

    def __init__(
        self,
        mesh: MeshConfig,
        controllers: int,
        history_length: int,
        intervals: Sequence[int],
    ) -> None:
        self.mesh = mesh
        self.cubes = mesh.cubes
        self.controllers = controllers
        self.history_length = history_length
        self.intervals = tuple(intervals)
        self.hop_norm = float(max(1, mesh.width + mesh.height - 2))

    @property
    def length(self) -> int:
        n, m, h = self.cubes, self.controllers, self.history_length
        return 7 * n + m + 5 * h + len(self.intervals) + 4

    def _history(self, values: Sequence[float], norm: float) -> list[float]:
        scaled = [min(1.0, max(0.0, v / norm)) for v in values]
        return scaled + [0.0] * (self.history_length - len(scaled))

    def _one_hot(self, index: int | None, size: int) -> list[float]:
        vector = [0.0] * size
        if index is not None:
            vector[index] = 1.0
        return vector

    def encode(
        self,
        counters: SystemCounters,
        page: PageView,
        global_history: Sequence[int],
        completion_share: Sequence[float],
        interval: int,
    ) -> np.ndarray:
        entry = page.entry
        last = N_ACTIONS - 1
        state: list[float] = []
        state += counters.nmp_occupancy
        state += counters.row_hit_rate
        state += list(completion_share)
        state += counters.mc_occupancy
        state += self._history(list(global_history)[-self.history_length :], last)
        state += self._one_hot(self.intervals.index(interval), len(self.intervals))
        state += [
            min(1.0, entry.access_count / self.access_norm),
            min(1.0, entry.migrations_per_access),
            float(page.read_only),
            float(page.migrating),
        ]
        state += self._history(entry.hop_history, self.hop_norm)
        state += self._history(entry.latency_history, self.latency_norm)
        state += self._history(entry.migration_latency_history, self.migration_latency_norm)
        state += self._history(entry.action_history, last)
        state += self._one_hot(page.host_cube, self.cubes)
        state += self._one_hot(page.compute_cube, self.cubes)
        state += self._one_hot(page.src1_cube, self.cubes)
        state += self._one_hot(page.remap_target, self.cubes)
        return np.asarray(state, dtype=np.float64)


# -----------------------------------------------------------------------------
# Actions
# -----------------------------------------------------------------------------
class ActionContext(Protocol):
    """
    The part of the simulator an action can change.
    """

    mesh: MeshConfig
    interval: int

    def request_migration(self, page: int, dst_cube: int) -> object: ...

    def set_compute_remap(self, page: int, cube: int) -> None: ...


@dataclass(frozen=True)
class ActionEffect:
    action: Action
    target_cube: int | None
    interval: int


def apply_action(
    action: Action,
    page: PageView,
    context: ActionContext,
    rng: np.random.Generator,
    intervals: Sequence[int],
) -> ActionEffect:
    """
    Carry out an agent action on the candidate page.

    Data remaps queue a migration of the page; compute remaps install a compute remap entry.
    Near targets are a random mesh neighbour of the page's recent compute cube, far targets the
    diagonally opposite cube; the interval actions step through `intervals`, clamped at the ends.
    """
    mesh = context.mesh
    compute = page.compute_cube
    target: int | None = None

    match action:
        case Action.DEFAULT_MAPPING:
            pass
        case Action.NEAR_DATA_REMAP | Action.NEAR_COMPUTE_REMAP:
            neighbors = mesh.neighbors(compute)
            target = neighbors[int(rng.integers(len(neighbors)))] if neighbors else compute
        case Action.FAR_DATA_REMAP | Action.FAR_COMPUTE_REMAP:
            target = mesh.diagonal(compute)
        case Action.SOURCE_COMPUTE_REMAP:
            target = page.src1_cube
        case Action.INCREASE_INTERVAL | Action.DECREASE_INTERVAL:
            index = intervals.index(context.interval)
            step = 1 if action == Action.INCREASE_INTERVAL else -1
            context.interval = intervals[min(len(intervals) - 1, max(0, index + step))]

    if target is not None:
        if action in (Action.NEAR_DATA_REMAP, Action.FAR_DATA_REMAP):
            context.request_migration(page.entry.page, target)
        else:
            context.set_compute_remap(page.entry.page, target)

    return ActionEffect(action, target, context.interval)


# -----------------------------------------------------------------------------
# Agent
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class TrainingLogRow:
    tick: int
    epsilon: float
    loss: float | None
    reward: int | None
    action: int
    interval: int


class Agent:
    """
    Deep Q-learning control loop.

    Each call to `step` turns the previous (state, action) and the reward of the OPC change into
    an experience, picks the next action epsilon-greedily and trains on a replay batch every
    `train_period` steps. The network, target network and step counters persist across episodes;
    everything else is reset by `begin_episode`.

    Args:
        config: Agent hyper-parameters
        state_length: Length of the state vectors
        seed: Seed of initialisation, exploration, replay sampling and action targets
    """

    def __init__(self, config: AgentConfig, state_length: int, seed: int = 0) -> None:
        self.config = config
        init_rng, self.policy_rng, replay_rng, self.action_rng = (
            np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(4)
        )
        self.net = QNetwork(state_length, config.hidden, N_ACTIONS, init_rng)
        self.target = self.net.copy() if config.target_sync_period > 0 else self.net
        self.replay = ReplayBuffer(config.replay_capacity, replay_rng)
        self.ticks = 0
        self.episodes = 0
        self.train_steps = 0
        self.inferences = 0
        self.training_log: list[TrainingLogRow] = []

        self.global_history: deque[int] = deque(maxlen=64)
        self._previous: tuple[np.ndarray, int, float] | None = None
        self._executor: ThreadPoolExecutor | None = None
        self._pending: Future[tuple[float, dict[str, np.ndarray]]] | None = None
        if config.async_training:
            self._executor = ThreadPoolExecutor(max_workers=1)

    @property
    def epsilon(self) -> float:
        return epsilon_at(self.config, self.ticks, self.episodes)

    @property
    def warm(self) -> bool:
        return len(self.replay) >= self.config.batch_size

    def begin_episode(self) -> None:
        self._previous = None
        self.global_history.clear()
        if not self.config.keep_replay:
            self.replay.clear()

    def step(self, state: np.ndarray, opc: float, interval: int) -> Action:
        self._collect()
        reward: int | None = None
        if self._previous is not None:
            prev_state, prev_action, prev_opc = self._previous
            reward = compute_reward(prev_opc, opc, self.config.reward_tolerance)
            self.replay.push(Experience(prev_state, prev_action, reward, state))

        epsilon = self.epsilon
        action = select_action(self.net, state, epsilon, self.policy_rng)
        self.inferences += 1
        self.ticks += 1

        loss = None
        if self.ticks % self.config.train_period == 0 and self.warm:
            loss = self.train()

        self.training_log.append(
            TrainingLogRow(self.ticks, epsilon, loss, reward, int(action), interval)
        )
        self._previous = (state, int(action), opc)
        self.global_history.append(int(action))
        return action

    def end_episode(self, state: np.ndarray | None, opc: float) -> None:
        """
        Store the terminal experience of the episode and train on it.
        """
        self.episodes += 1
        if self._previous is None:
            return
        prev_state, prev_action, prev_opc = self._previous
        reward = compute_reward(prev_opc, opc, self.config.reward_tolerance)
        final = prev_state if state is None else state
        self.replay.push(Experience(prev_state, prev_action, reward, final, terminal=True))
        self._previous = None
        if self.warm:
            self.train()
        self._collect(wait=True)

    def train(self) -> float | None:
        batch = self.replay.sample(self.config.batch_size)
        if not batch:
            return None

        if self._executor is not None:
            self._collect(wait=True)
            snapshot, target = self.net.copy(), self.target
            if target is self.net:
                target = snapshot
            self._pending = self._executor.submit(
                self._gradients, snapshot, target.copy(), batch
            )
            return None

        loss = train_step(
            self.net,
            self.target,
            batch,
            self.config.gamma,
            self.config.learning_rate,
            self.train_steps,
        )
        self._after_train()
        return loss

    def _gradients(
        self, net: QNetwork, target: QNetwork, batch: list[Experience]
    ) -> tuple[float, dict[str, np.ndarray]]:
        states = np.stack([e.state for e in batch])
        actions = np.array([e.action for e in batch], dtype=np.int64)
        targets = td_targets(target, batch, self.config.gamma)
        return net.loss_and_gradients(states, actions, targets)

    def _collect(self, wait: bool = False) -> None:
        """
        Apply the update of a finished background training step.
        """
        if self._pending is None or not (wait or self._pending.done()):
            return
        loss, grads = self._pending.result()
        self._pending = None
        if not np.isfinite(loss):
            raise TrainingDiverged(self.train_steps, loss)
        self.net.apply(grads, self.config.learning_rate)
        self._after_train()

    def _after_train(self) -> None:
        self.train_steps += 1
        period = self.config.target_sync_period
        if period > 0 and self.train_steps % period == 0:
            self.target = self.net.copy()
            logging.info("target network synchronised after %s steps", self.train_steps)

    def close(self) -> None:
        if self._executor is not None:
            self._collect(wait=True)
            self._executor.shutdown()
            self._executor = None
