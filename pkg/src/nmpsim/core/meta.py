from __future__ import annotations

from datetime import datetime
from enum import StrEnum
from typing import Self

from pydantic import BaseModel, Field


class RunStatus(StrEnum):
    """
    Enumeration of possible states of a simulation run.

    Attributes:
        INITIALIZING: Configuration is being validated and traces resolved
        INITIALIZING_FAILED: Startup failed (bad config, unreadable trace)
        INITIALIZED: Everything is resolved, no cycle has been simulated yet
        RUNNING: Repeats are being simulated
        RUN_FAILED: The simulation aborted with a diagnostic
        COMPLETED: All repeats drained and the report is available
    """

    INITIALIZING = "INITIALIZING"
    INITIALIZING_FAILED = "INITIALIZING_FAILED"
    INITIALIZED = "INITIALIZED"

    RUNNING = "RUNNING"
    RUN_FAILED = "RUN_FAILED"
    COMPLETED = "COMPLETED"


class RunMetaData(BaseModel):
    """
    Lifecycle record of a simulation run.

    Tracks the status of a run with a timestamp for every transition and a log of
    diagnostic messages. It is persisted next to the report but never merged into it,
    so reports stay byte-identical across reruns.

    Attributes:
        run_id: Identifier of the run
        status: Current status of the run
        repeats_done: Number of finished repeats
        initializing_started_at: Timestamp when the run was created
        running_started_at: Timestamp when the first repeat started (or None)
        running_stopped_at: Timestamp when the run finished or failed (or None)
        updated_at: Timestamp of the last status update
        log: Diagnostic messages collected during the run
    """

    run_id: str
    status: RunStatus = RunStatus.INITIALIZING
    repeats_done: int = 0
    initializing_started_at: datetime = Field(default_factory=datetime.now)
    initializing_stopped_at: datetime | None = None
    running_started_at: datetime | None = None
    running_stopped_at: datetime | None = None
    updated_at: datetime = Field(default_factory=datetime.now)
    log: list[str] = Field(default_factory=list)

    def update_log(self, message: str) -> Self:
        self.log.append(message)
        return self

    def update_status(self, status: RunStatus) -> Self:
        """
        Update the run's status and set the corresponding timestamps.

        Args:
            status: The new status to set for the run

        Returns:
            Self: The updated instance for method chaining
        """
        self.status = status
        timestamp = datetime.now()
        match status:
            case RunStatus.INITIALIZING:
                self.initializing_started_at = timestamp
            case RunStatus.INITIALIZING_FAILED:
                self.initializing_stopped_at = timestamp
            case RunStatus.INITIALIZED:
                self.initializing_stopped_at = timestamp
            case RunStatus.RUNNING:
                self.running_started_at = timestamp
            case RunStatus.RUN_FAILED:
                self.running_stopped_at = timestamp
            case RunStatus.COMPLETED:
                self.running_stopped_at = timestamp

        self.updated_at = timestamp
        return self

    def has_error(self) -> bool:
        return self.status in (RunStatus.INITIALIZING_FAILED, RunStatus.RUN_FAILED)

    def has_completed(self) -> bool:
        return self.status == RunStatus.COMPLETED

    def to_json(self) -> str:
        return self.model_dump_json()

    @classmethod
    def from_json(cls, data: str) -> Self:
        return cls.model_validate_json(data)
