from __future__ import annotations

import logging
from collections import Counter
from pathlib import Path, PurePath
from typing import TYPE_CHECKING

import numpy as np

from ...core.agent import Agent, PageView, StateEncoder, apply_action
from ...core.config import RemapperKind, SimConfig
from ...core.metrics import EventTally
from ...core.offload import PageInfoEntry, TouchKind, select_candidate_page
from ...core.paging import Permission
from ...core.remapper import Remapper
from ..encoders import load_checkpoint, save_checkpoint
from ..resources import FolderResource, LocalFolder

if TYPE_CHECKING:
    from ...core.simulation import Simulator


class AimmRemapper(Remapper):
    """
    Reinforcement-learning page and computation remapper.

    At the end of every interval the memory controllers take turns providing their hottest page;
    the agent observes the system counters and that page's history, is rewarded for the OPC
    change since its previous decision and picks one of eight actions: keep the mapping, migrate
    the page near or far, remap its computation near, far or to its first source, or lengthen or
    shorten the interval. The Q-network is the only state carried from one episode to the next.

    Args:
        config: Run configuration
        folder: Where the checkpoint lives; defaults to the checkpoint's own directory
    """

    kind = RemapperKind.AIMM

    def __init__(self, config: SimConfig, folder: FolderResource | None = None) -> None:
        super().__init__(config)
        self.encoder = StateEncoder(
            config.mesh,
            config.controller.count,
            config.controller.history_length,
            config.agent.intervals,
        )
        self.agent = Agent(config.agent, self.encoder.length, config.agent_seed)
        self.cursor = 0
        self.skipped = 0
        self.actions: Counter[int] = Counter()
        self.state_accesses = 0
        self._last_state: np.ndarray | None = None
        self._baseline = (0, 0, 0, 0)

        self.folder: FolderResource | None = None
        self.checkpoint: PurePath | None = None
        if config.agent.checkpoint is not None:
            path = Path(config.agent.checkpoint)
            self.folder = folder or LocalFolder(path.parent)
            self.checkpoint = PurePath(path.name) if folder is None else PurePath(path)
            load_checkpoint(self.agent, self.folder, self.checkpoint)

    def _counts(self) -> tuple[int, int, int, int]:
        return (
            self.agent.inferences,
            self.agent.train_steps,
            self.agent.replay.accesses,
            self.state_accesses,
        )

    def begin_episode(self, sim: Simulator) -> None:
        self.cursor = 0
        self._last_state = None
        self.agent.begin_episode()
        self._baseline = self._counts()

    def view(self, sim: Simulator, entry: PageInfoEntry) -> PageView:
        page = entry.page
        mapped = sim.page_table.lookup(page)
        return PageView(
            entry,
            sim.page_table.host_cube(page),
            read_only=mapped is not None and mapped.permission == Permission.READ_ONLY,
            migrating=sim.migrations.in_flight(page),
            remap_target=sim.remap_table.lookup(page),
        )

    def on_interval(self, sim: Simulator, cycle: int, opc: float) -> None:
        entry, self.cursor = select_candidate_page(sim.page_caches, self.cursor)
        if entry is None:
            self.skipped += 1
            return

        view = self.view(sim, entry)
        state = self.encoder.encode(
            sim.counters,
            view,
            self.agent.global_history,
            sim.last_completion_share,
            sim.interval,
        )
        self.state_accesses += 1
        action = self.agent.step(state, opc, sim.interval)
        effect = apply_action(
            action, view, sim, self.agent.action_rng, self.config.agent.intervals
        )
        entry.touch(TouchKind.ACTION, int(action))
        self.actions[int(action)] += 1
        self._last_state = state
        logging.debug(
            "cycle %s: page %#x action %s target %s", cycle, entry.page, action.name, effect.target_cube
        )

    def end_episode(self, sim: Simulator, opc: float) -> None:
        self.agent.end_episode(self._last_state, opc)
        if self.folder is not None and self.checkpoint is not None:
            save_checkpoint(self.agent, self.folder, self.checkpoint)

    def tally(self) -> EventTally:
        """
        Weight matrix accesses are one per inference plus three per trained sample (online
        forward, backward and target forward); replay and state buffer accesses are counted
        directly.
        """
        inferences, steps, replay, states = (
            now - then for now, then in zip(self._counts(), self._baseline)
        )
        return EventTally(
            weight_accesses=inferences + 3 * steps * self.config.agent.batch_size,
            replay_accesses=replay,
            state_accesses=states,
        )

    def close(self) -> None:
        self.agent.close()
