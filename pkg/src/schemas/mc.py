from pydantic import BaseModel, ConfigDict, Field, model_validator


class McConfig(BaseModel):
    """蒙特卡洛模拟配置"""
    model_config = ConfigDict(frozen=True)

    n_paths: int = Field(..., ge=2, description="路径数（至少2条才能估计标准误）")
    n_time_steps: int = Field(..., ge=1, description="每条路径的时间步数")
    seed: int = Field(..., ge=0, le=2 ** 64 - 1, description="64位随机种子")
    antithetic: bool = Field(False, description="是否使用对偶变量")
    block_size: int = Field(4096, ge=1, description="每个计数器块的路径数")

    @model_validator(mode='after')
    def validate_antithetic(self) -> 'McConfig':
        if self.antithetic and self.n_paths % 2 != 0:
            raise ValueError('使用对偶变量时路径数必须为偶数')
        if self.antithetic and self.n_paths < 4:
            raise ValueError('使用对偶变量时至少需要两对路径')
        return self
