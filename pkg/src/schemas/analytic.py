from pydantic import BaseModel, ConfigDict, Field


class AnalyticInputs(BaseModel):
    """Cox / Emanuel–MacBeth 闭式解的参数组 (a, b, c, ω)"""
    model_config = ConfigDict(frozen=True)

    a: float = Field(..., ge=0, description="执行价一侧的卡方自变量")
    b: float = Field(..., description="自由度参数 b = 1/(1-α)")
    c: float = Field(..., ge=0, description="股价一侧的卡方自变量")
    omega: float = Field(..., gt=0, description="方差尺度 ω")


class Table1Row(BaseModel):
    """表1金标准的一行"""
    model_config = ConfigDict(frozen=True)

    beta: float = Field(..., gt=0, le=2, description="弹性指数β")
    S: float = Field(..., gt=0, description="初始股价")
    E: float = Field(..., gt=0, description="执行价")
    T: float = Field(..., gt=0, description="到期时间（年）")
    analytic: float = Field(..., ge=0, description="解析解")
    tree365: float = Field(..., ge=0, description="N=365 的格点价格")
    tree730: float = Field(..., ge=0, description="N=730 的格点价格")
