import functools
import logging
from typing import Generic, Optional, TypeVar

from pydantic import BaseModel

logger = logging.getLogger(__name__)

T = TypeVar("T")


class CommandResult(BaseModel, Generic[T]):
    error_code: int
    error_message: str
    data: Optional[T] = None


class VosMemError(Exception):
    """Root of every engine error. ``error_code`` doubles as the CLI exit status."""

    def __init__(self, error_code: int, error_message: str):
        super().__init__(error_code, error_message)
        self.error_code = error_code
        self.error_message = error_message

    def __str__(self) -> str:
        return self.error_message


class CodedError(VosMemError):
    """An error whose code is fixed by its class; raised with just a message."""

    code = 1

    def __init__(self, error_message: str):
        super().__init__(self.code, error_message)

    def __reduce__(self):
        return type(self), (self.error_message,)


class UsageError(CodedError):
    code = 2


class ConfigError(CodedError):
    code = 3


class OutputError(CodedError):
    code = 4


class SpecError(CodedError):
    code = 5


class DimensionError(CodedError):
    code = 10


class ResolutionError(CodedError):
    code = 11


class DegenerateRowError(CodedError):
    code = 12


class AlignmentError(CodedError):
    code = 20


class ScoreRangeError(CodedError):
    code = 21


class DegenerateAnchorError(CodedError):
    code = 22


class CausalityError(CodedError):
    code = 30


class OrderingError(CodedError):
    code = 31


class NoEvictableError(CodedError):
    code = 32


class EmptyMemoryError(CodedError):
    code = 33


class DecodeError(CodedError):
    code = 40


class OracleMismatchError(CodedError):
    code = 60


class EpisodeError(CodedError):
    code = 50

    def __init__(self, frame_index: int, error_message: str):
        super().__init__(f"frame {frame_index}: {error_message}")
        self.frame_index = frame_index
        self.detail = error_message

    def __reduce__(self):
        return EpisodeError, (self.frame_index, self.detail)


def wrap_result(data: T, error_code: int = 0, error_message: str = "") -> CommandResult[T]:
    return CommandResult(error_code=error_code, error_message=error_message, data=data)


def handle_return_or_raise(function):
    @functools.wraps(function)
    def wrapper(*args, **kwargs):
        try:
            return_data = function(*args, **kwargs)
        except VosMemError as e:
            logger.error("%s failed: %s", function.__name__, e.error_message)
            return wrap_result(None, e.error_code, e.error_message)
        return wrap_result(return_data)
    return wrapper
