from dataclasses import dataclass
from typing import Any, Dict, List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class CevParams(BaseModel):
    """CEV过程及市场参数模型"""
    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {
                "s0": 1.0,
                "sigma": 0.2,
                "beta": 1.0,
                "r": 0.05,
                "q": 0.0
            }
        }
    )

    s0: float = Field(..., gt=0, description="初始股价")
    sigma: float = Field(..., gt=0, description="CEV尺度参数σ")
    beta: float = Field(..., gt=0, description="弹性指数β（格点要求 β ≤ 2，解析公式允许 β > 2）")
    r: float = Field(0.05, ge=0, description="无风险利率（年化）")
    q: float = Field(0.0, ge=0, description="连续股息率（年化，仅解析与蒙特卡洛模块使用）")

    @field_validator('s0', 'sigma', 'beta', 'r', 'q')
    @classmethod
    def validate_finite(cls, v: float) -> float:
        if not np.isfinite(v):
            raise ValueError('参数必须为有限数')
        return v

    @property
    def alpha(self) -> float:
        """解析公式中的指数 α = β/2"""
        return self.beta / 2.0


class EnvelopePoint(BaseModel):
    """格点包络线上的一个点"""
    model_config = ConfigDict(frozen=True)

    tau: float = Field(..., ge=0, description="重标度时间 τ = n·√Δt")
    upper: float = Field(..., description="上包络")
    lower: float = Field(..., ge=0, description="下包络（在0处截断）")


@dataclass(frozen=True)
class Lattice:
    """
    精确重组的CEV价格格点

    由平移恒等式 S(i,j) = S(i-1,j-1)，第 i 层恰好是一条长度为 2N+1 的主网格
    上以 s0 为中心的连续窗口，因此只存一份主网格：
        第 i 层 = grid[N-i+1 : N+i]，S(i,j) = grid[N-i+j]
    层号 i 与节点号 j 均从 1 开始。
    """
    dt: float
    n_steps: int
    grid: np.ndarray
    floored: np.ndarray
    eps_floor: float

    def __post_init__(self):
        self.grid.setflags(write=False)
        self.floored.setflags(write=False)

    @property
    def n_levels(self) -> int:
        return self.n_steps + 1

    @property
    def s0(self) -> float:
        return float(self.grid[self.n_steps])

    def _window(self, level: int) -> slice:
        if level < 1 or level > self.n_levels:
            raise IndexError(f"level {level} out of range 1..{self.n_levels}")
        return slice(self.n_steps - level + 1, self.n_steps + level)

    def level(self, level: int) -> np.ndarray:
        """第 level 层的 2i-1 个价格（只读视图）"""
        return self.grid[self._window(level)]

    def level_floored(self, level: int) -> np.ndarray:
        """第 level 层的截断标记"""
        return self.floored[self._window(level)]

    @property
    def levels(self) -> List[np.ndarray]:
        return [self.level(i) for i in range(1, self.n_levels + 1)]

    def grid_index(self, level: int, node: int) -> int:
        """(i, j) 到主网格下标的映射"""
        if node < 1 or node > 2 * level - 1:
            raise IndexError(f"node {node} out of range 1..{2 * level - 1} at level {level}")
        self._window(level)
        return self.n_steps - level + node

    def price(self, level: int, node: int) -> float:
        return float(self.grid[self.grid_index(level, node)])

    def is_floored(self, level: int, node: int) -> bool:
        return bool(self.floored[self.grid_index(level, node)])

    def reachable_indices(self, level: int) -> np.ndarray:
        """第 level 层可达节点（奇数 j）的主网格下标"""
        start = self.n_steps - level + 1
        return np.arange(start, start + 2 * level - 1, 2)

    def to_dump(self) -> Dict[str, Any]:
        """导出为 --dump-lattice 的 JSON 结构，levels[i-1][j-1] = S(i,j)"""
        return {
            "dt": self.dt,
            "n_steps": self.n_steps,
            "levels": [self.level(i).tolist() for i in range(1, self.n_levels + 1)],
            "floored": [self.level_floored(i).tolist() for i in range(1, self.n_levels + 1)],
        }
