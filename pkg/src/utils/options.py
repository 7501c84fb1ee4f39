from typing import Callable, Dict, List, Optional

import click
from pydantic import ValidationError

from schemas.cli import Command, RunConfig
from schemas.lattice import CevParams
from schemas.pricing import PayoffSpec
from utils.config import get_defaults_config
from utils.exceptions import ValidationException

defaults = get_defaults_config()

# 模型字段 -> 命令行参数
FLAG_NAMES: Dict[str, str] = {
    "s0": "--s0",
    "strike": "--strike",
    "sigma": "--sigma",
    "beta": "--beta",
    "r": "--r",
    "q": "--q",
    "maturity": "--t",
    "steps": "--steps",
    "kind": "--kind",
    "style": "--style",
    "mode": "--mode",
    "n_paths": "--paths",
    "n_time_steps": "--time-steps",
    "seed": "--seed",
    "antithetic": "--antithetic",
}


def translate_validation_error(e: ValidationError) -> ValidationException:
    """把 pydantic 的校验错误转换为指明命令行参数的 ValidationException"""
    error = e.errors()[0]
    location = [str(part) for part in error.get("loc", ())]
    field = next((FLAG_NAMES[part] for part in reversed(location) if part in FLAG_NAMES), None)
    message = error.get("msg", str(e))
    if message.startswith("Value error, "):
        message = message[len("Value error, "):]
    detail = f"{field}: {message}" if field else message
    return ValidationException(detail, field=field)


def build_params(s0: float, sigma: float, beta: float, r: float, q: float) -> CevParams:
    try:
        return CevParams(s0=s0, sigma=sigma, beta=beta, r=r, q=q)
    except ValidationError as e:
        raise translate_validation_error(e)


def build_payoff(kind: str, strike: float) -> PayoffSpec:
    try:
        return PayoffSpec(kind=kind, strike=strike)
    except ValidationError as e:
        raise translate_validation_error(e)


def build_run_config(command: Command, **bindings) -> RunConfig:
    """绑定并校验一次调用的全部参数，任何计算之前执行"""
    try:
        return RunConfig(command=command, **bindings)
    except ValidationError as e:
        raise translate_validation_error(e)


def parse_steps(text: str) -> List[int]:
    """解析逗号分隔的步数列表"""
    parts = [part.strip() for part in text.split(",") if part.strip()]
    if not parts:
        raise ValidationException("steps list must not be empty", field="--steps")
    try:
        return [int(part) for part in parts]
    except ValueError:
        raise ValidationException(f"steps must be integers, got {text!r}", field="--steps")


def market_options(func: Callable) -> Callable:
    """CEV过程与市场参数"""
    options = [
        click.option("--s0", type=float, default=defaults['s0'], show_default=True, help="初始股价"),
        click.option("--sigma", type=float, default=defaults['sigma'], show_default=True, help="CEV尺度参数σ"),
        click.option("--beta", type=float, default=defaults['beta'], show_default=True, help="弹性指数β"),
        click.option("--r", "r", type=float, default=defaults['r'], show_default=True, help="无风险利率"),
        click.option("--q", "q", type=float, default=defaults['q'], show_default=True, help="连续股息率"),
        click.option("--t", "maturity", type=float, default=defaults['maturity'], show_default=True,
                     help="到期时间（年）"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def contract_options(func: Callable) -> Callable:
    """期权合约参数"""
    func = click.option("--kind", type=click.Choice(["put", "call"]), default="put", show_default=True,
                        help="期权类型")(func)
    func = click.option("--strike", type=float, default=defaults['strike'], show_default=True,
                        help="执行价E")(func)
    return func


def mode_option(default: Optional[str] = None) -> Callable:
    return click.option(
        "--mode",
        type=click.Choice(["exact-h", "approx-p"]),
        default=default or defaults['mode'],
        show_default=True,
        help="转移权重模式"
    )


def output_options(default_format: str = "csv") -> Callable:
    """输出格式与输出路径"""
    def decorator(func: Callable) -> Callable:
        func = click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None,
                            help="输出文件，缺省为标准输出")(func)
        func = click.option("--format", "output_format", type=click.Choice(["csv", "json"]),
                            default=default_format, show_default=True, help="输出格式")(func)
        return func
    return decorator

