import pickle

import pytest

from vosmem.errors import (
    CodedError,
    CommandResult,
    ConfigError,
    EpisodeError,
    SpecError,
    VosMemError,
    handle_return_or_raise,
)


def test_error_code_comes_first():
    error = VosMemError(7, "broken")
    assert (error.error_code, error.error_message) == (7, "broken")
    assert str(error) == "broken"
    assert ConfigError("bad field").error_code == 3
    assert issubclass(SpecError, CodedError)


@pytest.mark.parametrize("error", [
    SpecError("waypoint outside the frame"),
    ConfigError("policy.capacity: must be >= 1"),
    EpisodeError(12, "score 1.5 outside [0, 1]"),
    VosMemError(9, "plain"),
])
def test_errors_survive_pickling(error):
    # 子进程中抛出的异常需要能传回主进程
    restored = pickle.loads(pickle.dumps(error))
    assert type(restored) is type(error)
    assert (restored.error_code, restored.error_message) == (error.error_code, error.error_message)


def test_episode_error_keeps_its_frame_after_pickling():
    restored = pickle.loads(pickle.dumps(EpisodeError(4, "boom")))
    assert restored.frame_index == 4
    assert restored.detail == "boom"
    assert restored.error_message == "frame 4: boom"
    assert restored.error_code == 50


def test_handle_return_or_raise_wraps_both_paths():
    @handle_return_or_raise
    def divide(a, b):
        if b == 0:
            raise SpecError("division by zero")
        return a / b

    ok = divide(6, 3)
    assert isinstance(ok, CommandResult)
    assert (ok.error_code, ok.error_message, ok.data) == (0, "", 2.0)
    failed = divide(1, 0)
    assert (failed.error_code, failed.error_message, failed.data) == (5, "division by zero", None)
