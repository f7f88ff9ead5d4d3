from datetime import datetime

import pytest

from nmpsim.core import RunMetaData, RunStatus


def test_default_initialization():
    before = datetime.now()
    meta = RunMetaData(run_id="bnmp.none.seed0")
    after = datetime.now()

    assert meta.status == RunStatus.INITIALIZING
    assert meta.initializing_stopped_at is None
    assert meta.running_started_at is None
    assert meta.running_stopped_at is None
    assert before <= meta.initializing_started_at <= after
    assert before <= meta.updated_at <= after


def test_update_status_initialized():
    meta = RunMetaData(run_id="r").update_status(RunStatus.INITIALIZED)

    assert meta.status == RunStatus.INITIALIZED
    assert meta.initializing_stopped_at is not None
    assert meta.running_started_at is None
    assert meta.initializing_started_at <= meta.initializing_stopped_at


def test_update_status_running_then_completed():
    meta = RunMetaData(run_id="r")
    meta.update_status(RunStatus.RUNNING)
    assert meta.running_started_at is not None
    assert meta.running_stopped_at is None

    meta.update_status(RunStatus.COMPLETED)
    assert meta.has_completed()
    assert not meta.has_error()
    assert meta.running_started_at <= meta.running_stopped_at  # type: ignore


@pytest.mark.parametrize("status", [RunStatus.INITIALIZING_FAILED, RunStatus.RUN_FAILED])
def test_failed_states_are_errors(status: RunStatus):
    meta = RunMetaData(run_id="r").update_status(status)
    assert meta.has_error()
    assert not meta.has_completed()


def test_log_and_json():
    meta = RunMetaData(run_id="r").update_log("first").update_log("second")
    meta.repeats_done = 3

    restored = RunMetaData.from_json(meta.to_json())
    assert restored.log == ["first", "second"]
    assert restored.repeats_done == 3
    assert restored.initializing_started_at == meta.initializing_started_at
