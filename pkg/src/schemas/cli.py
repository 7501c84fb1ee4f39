from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, Field, field_validator

from schemas.lattice import CevParams
from schemas.pricing import ExerciseStyle, PayoffSpec, WeightsMode


class Command(str, Enum):
    PRICE = "price"
    TABLE1 = "table1"
    CONVERGE = "converge"
    ENVELOPE = "envelope"
    DENSITY = "density"
    MC = "mc"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class RunConfig(BaseModel):
    """一次命令行调用绑定的全部参数"""
    command: Command = Field(..., description="子命令")
    params: CevParams = Field(..., description="CEV过程参数")
    payoff: Optional[PayoffSpec] = Field(None, description="期权收益定义")
    style: ExerciseStyle = Field(ExerciseStyle.EUROPEAN, description="行权方式")
    mode: WeightsMode = Field(WeightsMode.EXACT_H, description="权重模式")
    maturity: float = Field(..., gt=0, description="到期时间（年）")
    steps: List[int] = Field(..., min_length=1, description="时间步数列表")
    output_format: OutputFormat = Field(OutputFormat.CSV, description="输出格式")
    out: Optional[str] = Field(None, description="输出路径，缺省为标准输出")

    @field_validator('steps')
    @classmethod
    def validate_steps(cls, v: List[int]) -> List[int]:
        if any(n < 1 for n in v):
            raise ValueError('steps must be ≥ 1')
        if any(later <= earlier for earlier, later in zip(v, v[1:])):
            raise ValueError('steps must be strictly ascending')
        return v
