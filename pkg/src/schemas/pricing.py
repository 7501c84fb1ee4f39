from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class OptionKind(str, Enum):
    PUT = "put"
    CALL = "call"


class ExerciseStyle(str, Enum):
    EUROPEAN = "european"
    AMERICAN = "american"


class WeightsMode(str, Enum):
    EXACT_H = "exact-h"
    APPROX_P = "approx-p"


class PayoffSpec(BaseModel):
    """期权收益定义"""
    model_config = ConfigDict(frozen=True)

    kind: OptionKind = Field(OptionKind.PUT, description="期权类型：put-看跌 call-看涨")
    strike: float = Field(..., gt=0, description="执行价E")

    def intrinsic(self, prices: np.ndarray) -> np.ndarray:
        """立即行权价值 Λ(S)，按元素计算"""
        if self.kind == OptionKind.PUT:
            return np.maximum(self.strike - prices, 0.0)
        return np.maximum(prices - self.strike, 0.0)


class TransitionWeights(BaseModel):
    """单个节点的上/下转移权重"""
    model_config = ConfigDict(frozen=True)

    h_up: float = Field(..., description="向上权重")
    h_down: float = Field(..., description="向下权重")
    mode: WeightsMode = Field(..., description="权重模式：exact-h | approx-p")

    @property
    def total(self) -> float:
        return self.h_up + self.h_down

    @property
    def normalized_up(self) -> float:
        """归一化后的向上概率，用于终端分布"""
        return self.h_up / (self.h_up + self.h_down)


class Greeks(BaseModel):
    """扰动重定价得到的希腊字母"""
    delta: float = Field(..., description="Delta（s0 中心差分）")
    gamma: float = Field(..., description="Gamma（s0 二阶中心差分）")
    vega: float = Field(..., description="Vega（σ 中心差分）")


class PricingResult(BaseModel):
    """格点定价结果"""
    model_config = ConfigDict(populate_by_name=True)

    price: float = Field(..., ge=0, description="期权价格（根节点价值）")
    style: ExerciseStyle = Field(..., description="行权方式")
    weights_mode: WeightsMode = Field(..., serialization_alias="mode", description="权重模式")
    n_steps: int = Field(..., ge=1, description="时间步数N")
    exercise_boundary: Optional[List[Tuple[int, float]]] = Field(
        None, description="提前行权边界：(时间下标, 最优立即行权的最大股价)"
    )
    greeks: Optional[Greeks] = Field(None, description="希腊字母（仅 --greeks 时给出）")

    @field_validator('price')
    @classmethod
    def validate_price(cls, v: float) -> float:
        if v != v:
            raise ValueError('价格不能为NaN')
        return v

    def to_output(self) -> Dict:
        """CLI输出结构，greeks 为空时省略"""
        payload = self.model_dump(mode="json", by_alias=True, exclude={"greeks"})
        if self.greeks is not None:
            payload["greeks"] = self.greeks.model_dump()
        return payload
