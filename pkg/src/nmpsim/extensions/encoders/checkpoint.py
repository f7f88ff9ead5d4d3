from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import PurePath

import numpy as np

from ...core.agent import PARAMETERS, Agent, QNetwork
from ...core.exceptions import ShapeMismatch
from ..resources import FolderResource
from .json import EnhancedJsonEncoder

CHECKPOINT_FORMAT = "nmpsim-qnetwork"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class CheckpointHeader:
    format: str
    version: int
    inputs: int
    hidden: int
    actions: int
    parameters: dict[str, tuple[int, ...]]
    train_steps: int
    ticks: int
    episodes: int = 0


def encode_checkpoint(
    net: QNetwork, train_steps: int = 0, ticks: int = 0, episodes: int = 0
) -> bytes:
    """
    One JSON header line followed by the little-endian float64 parameters in a fixed order.
    """
    header = CheckpointHeader(
        CHECKPOINT_FORMAT,
        CHECKPOINT_VERSION,
        net.inputs,
        net.hidden,
        net.actions,
        {name: net.shapes()[name] for name in PARAMETERS},
        train_steps,
        ticks,
        episodes,
    )
    line = json.dumps(header, cls=EnhancedJsonEncoder).encode("utf-8") + b"\n"
    return line + net.flat().astype("<f8").tobytes()


def decode_checkpoint(data: bytes) -> tuple[QNetwork, CheckpointHeader]:
    """
    Raises:
        ValueError: If the data is not a checkpoint
        ShapeMismatch: If the payload does not fit the shapes in the header
    """
    line, _, payload = data.partition(b"\n")
    raw = json.loads(line)
    if raw.get("format") != CHECKPOINT_FORMAT:
        raise ValueError("not a Q-network checkpoint")
    raw["parameters"] = {k: tuple(v) for k, v in raw["parameters"].items()}
    header = CheckpointHeader(**raw)

    net = QNetwork(header.inputs, header.hidden, header.actions)
    for name, shape in net.shapes().items():
        if header.parameters.get(name) != shape:
            raise ShapeMismatch(int(np.prod(shape)), int(np.prod(header.parameters.get(name, (0,)))))
    values = np.frombuffer(payload, dtype="<f8")
    net.load_flat(values.copy())
    return net, header


def save_checkpoint(agent: Agent, folder: FolderResource, path: PurePath) -> None:
    with folder.open(path, "wb") as f:
        f.write(encode_checkpoint(agent.net, agent.train_steps, agent.ticks, agent.episodes))
    logging.info("saved Q-network checkpoint to %s", path)


def load_checkpoint(agent: Agent, folder: FolderResource, path: PurePath) -> bool:
    """
    Restore the agent's network from `path` if the file exists.

    Raises:
        ShapeMismatch: If the stored network does not fit the agent's state length
    """
    if not folder.exists(path):
        return False
    with folder.open(path, "rb") as f:
        net, header = decode_checkpoint(f.read())
    if net.inputs != agent.net.inputs or net.hidden != agent.net.hidden:
        raise ShapeMismatch(agent.net.parameter_count, net.parameter_count)

    agent.net = net
    agent.target = net.copy() if agent.config.target_sync_period > 0 else net
    agent.train_steps = header.train_steps
    agent.ticks = header.ticks
    agent.episodes = header.episodes
    logging.info(
        "loaded Q-network checkpoint from %s (%s training steps)", path, header.train_steps
    )
    return True
