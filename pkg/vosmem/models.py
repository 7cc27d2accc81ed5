from enum import Enum
from typing import Optional

from sqlmodel import Field, SQLModel


# 数字类型枚举
class RunStatusEnum(int, Enum):
    RUNNING = 0
    SUCCEEDED = 1
    FAILED = 2


# 字符串类型枚举
class CommandEnum(str, Enum):
    SIMULATE = "simulate"
    SWEEP = "sweep"
    BENCH = "bench"


class NormModeEnum(str, Enum):
    RAW_SUM = "raw_sum"
    SOFTMAX = "softmax"


class PriorModeEnum(str, Enum):
    WEAK = "weak"
    STRONG = "strong"
    OFF = "off"


class EvictionModeEnum(str, Enum):
    DYNAMIC = "dynamic"
    FIFO_RECENT = "fifo_recent"
    UNLIMITED = "unlimited"


class AdmissionEnum(str, Enum):
    ADMITTED = "admitted"
    DEFERRED = "deferred"
    NOT_DUE = "not_due"
    REJECTED_FULL = "rejected_full"


class SweepAxisEnum(str, Enum):
    THRESHOLD = "threshold"
    CAPACITY = "capacity"
    INTERVAL = "interval"


class ShapeEnum(str, Enum):
    DISC = "disc"
    RECTANGLE = "rectangle"


class ScenarioEnum(str, Enum):
    STATIC = "static"
    TWO_OBJECTS = "two_objects"
    CORRUPTION = "corruption"
    DISTRACTORS = "distractors"
    SCENE_REVISIT = "scene_revisit"


def enum_comment(enum: type[Enum]) -> str:
    return " ".join([f"{item.value}: {item.name}" for item in enum])


class RunRecord(SQLModel, table=True):
    __tablename__ = "run_record"

    id: Optional[int] = Field(default=None, primary_key=True)
    command: str = Field(max_length=20, index=True, description=f"命令 {enum_comment(CommandEnum)}")
    config_digest: str = Field(max_length=64, index=True)
    seeds: str = Field(default="", description="comma separated seed list")
    tool_version: str = Field(max_length=20)
    status: int = Field(default=RunStatusEnum.RUNNING, description=f"运行状态 {enum_comment(RunStatusEnum)}")
    mean_jf: Optional[float] = None
    output_dir: str = ""

    def __str__(self) -> str:
        return f"<{self.id}>:{self.command}:{self.config_digest[:12]}"
