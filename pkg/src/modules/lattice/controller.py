import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np

from schemas.lattice import CevParams, EnvelopePoint, Lattice
from utils.config import get_lattice_config
from utils.exceptions import DegenerateSpacingException, ValidationException

logger = logging.getLogger(__name__)

lattice_config = get_lattice_config()


def validate_tree_params(params: CevParams) -> None:
    """
    格点只支持 0 < β ≤ 2 且不分红的股票
    """
    if params.beta > 2:
        raise ValidationException(
            f"beta={params.beta} > 2 is not supported by the lattice; "
            f"use the analytic module (table1 / mc) for beta > 2",
            field="--beta"
        )
    if params.q != 0:
        raise ValidationException(
            "the lattice assumes the stock pays no dividends; q must be 0",
            field="--q"
        )


def _variance_step(price: float, params: CevParams, dt: float) -> float:
    return params.sigma ** 2 * price ** params.beta * dt


def first_up_value(params: CevParams, dt: float) -> float:
    """
    第一次上行的股价 S(2,3) = s0·exp(σ s0^{β/2-1} √Δt)

    β=2 时即为 s0·e^{σ√Δt}，与几何布朗运动的二叉树一致
    """
    if dt <= 0:
        raise ValidationException("dt must be > 0", field="dt")
    return params.s0 * math.exp(params.sigma * params.s0 ** (params.beta / 2.0 - 1.0) * math.sqrt(dt))


def extend_top(middle: float, lower: float, params: CevParams, dt: float) -> float:
    """
    由重组方程解出三元组的上端

    Args:
        middle: 中间价格
        lower: 下端价格（0 < lower < middle）
        params: CEV参数
        dt: 时间步长

    Returns:
        middle + σ² middle^β Δt / (middle - lower)
    """
    spacing = middle - lower
    if spacing < lattice_config['spacing_rtol'] * middle:
        raise DegenerateSpacingException(context={"middle": middle, "lower": lower})
    return middle + _variance_step(middle, params, dt) / spacing


def extend_bottom(
    middle: float,
    upper: float,
    params: CevParams,
    dt: float,
    eps_floor: Optional[float] = None
) -> Tuple[float, bool]:
    """
    由重组方程解出三元组的下端，结果不大于 eps_floor 时截断到吸收下界

    Returns:
        (下端价格, 是否被截断)
    """
    if eps_floor is None:
        eps_floor = lattice_config['eps_floor_ratio'] * params.s0
    spacing = upper - middle
    if spacing < lattice_config['spacing_rtol'] * middle:
        raise DegenerateSpacingException(context={"middle": middle, "upper": upper})
    candidate = middle - _variance_step(middle, params, dt) / spacing
    if candidate <= eps_floor:
        return eps_floor, True
    return candidate, False


def build_lattice(params: CevParams, maturity: float, n_steps: int) -> Lattice:
    """
    逐层构建精确重组的CEV价格格点

    第 i 层的内部节点由平移恒等式直接沿用第 i-1 层，只有上下两端需要求解，
    所以整棵树就是一条从 s0 向两侧扩展的主网格。下端一旦截断，此后每层的
    新下端都直接置为 eps_floor（吸收）。
    """
    if n_steps < 1:
        raise ValidationException("steps must be ≥ 1", field="--steps")
    if not maturity > 0:
        raise ValidationException("maturity must be > 0", field="--t")
    validate_tree_params(params)

    n = n_steps
    dt = maturity / n
    eps_floor = lattice_config['eps_floor_ratio'] * params.s0
    grid = np.empty(2 * n + 1, dtype=np.float64)
    floored = np.zeros(2 * n + 1, dtype=bool)

    grid[n] = params.s0
    grid[n + 1] = first_up_value(params, dt)
    first_floored_level = None

    for level in range(2, n + 2):
        top = n + level - 1
        bottom = n - level + 1
        try:
            if level > 2:
                grid[top] = extend_top(grid[top - 1], grid[top - 2], params, dt)
            if floored[bottom + 1]:
                grid[bottom], floored[bottom] = eps_floor, True
            else:
                grid[bottom], floored[bottom] = extend_bottom(
                    grid[bottom + 1], grid[bottom + 2], params, dt, eps_floor
                )
        except DegenerateSpacingException as e:
            e.context.update({"level": level, "n_steps": n, "dt": dt})
            logger.error(f"格点构建失败: level={level}, {e.detail}")
            raise
        if floored[bottom] and first_floored_level is None:
            first_floored_level = level

    lattice = Lattice(dt=dt, n_steps=n, grid=grid, floored=floored, eps_floor=eps_floor)
    logger.info(
        f"格点构建完成: N={n}, dt={dt:.6g}, beta={params.beta}, "
        f"首个截断层={first_floored_level if first_floored_level is not None else '无'}"
    )
    residual = check_recombination(lattice, params)
    if residual > lattice_config['recombination_rtol']:
        logger.warning(f"重组方程相对残差 {residual:.3e} 超出容差 {lattice_config['recombination_rtol']:.1e}")
    else:
        logger.debug(f"重组方程最大相对残差: {residual:.3e}")
    return lattice


def check_recombination(lattice: Lattice, params: CevParams) -> float:
    """
    扫描所有不含截断节点的内部三元组，返回重组方程的最大相对残差
    """
    grid = lattice.grid
    if grid.size < 3:
        return 0.0
    lower, middle, upper = grid[:-2], grid[1:-1], grid[2:]
    usable = ~(lattice.floored[:-2] | lattice.floored[1:-1] | lattice.floored[2:])
    if not usable.any():
        return 0.0
    target = params.sigma ** 2 * middle[usable] ** params.beta * lattice.dt
    product = (upper[usable] - middle[usable]) * (middle[usable] - lower[usable])
    return float(np.max(np.abs(product - target) / target))


def envelope_closed_form(params: CevParams, tau: float, direction: str = "up") -> float:
    """
    包络方程 (y')² = σ² y^β 的闭式解

    β=2: y = s0·e^{±στ}
    β<2: y = ((2-β)/2·(±στ + c))^{2/(2-β)}，c = 2/(2-β)·s0^{(2-β)/2}，下支在 -στ+c ≤ 0 后取 0
    """
    return float(_envelope_curve(params, np.asarray([tau], dtype=np.float64), direction)[0])


def _envelope_curve(params: CevParams, taus: np.ndarray, direction: str) -> np.ndarray:
    if direction not in ("up", "down"):
        raise ValidationException(f"invalid envelope direction: {direction}", field="direction")
    sign = 1.0 if direction == "up" else -1.0
    if np.any(taus < 0):
        raise ValidationException("tau must be ≥ 0", field="tau")

    beta = params.beta
    if beta == 2:
        return params.s0 * np.exp(sign * params.sigma * taus)

    half_gap = (2.0 - beta) / 2.0
    c = params.s0 ** half_gap / half_gap
    base = half_gap * (sign * params.sigma * taus + c)
    return np.where(base > 0, np.maximum(base, 0.0) ** (1.0 / half_gap), 0.0)


def _level_taus(lattice: Lattice) -> np.ndarray:
    # 第1层位于 τ=0
    return np.arange(lattice.n_levels, dtype=np.float64) * math.sqrt(lattice.dt)


def envelope_deviation(lattice: Lattice, params: CevParams) -> float:
    """最上支与包络闭式解的最大相对偏差"""
    n = lattice.n_steps
    tree_upper = lattice.grid[n:]
    ode_upper = _envelope_curve(params, _level_taus(lattice), "up")
    return float(np.max(np.abs(tree_upper - ode_upper) / ode_upper))


def envelope_table(lattice: Lattice, params: CevParams) -> List[Dict[str, float]]:
    """
    逐层给出 (τ, 树上支, 树下支, ODE上支, ODE下支)
    """
    n = lattice.n_steps
    taus = _level_taus(lattice)
    tree_upper = lattice.grid[n:]
    tree_lower = lattice.grid[n::-1]
    ode_upper = _envelope_curve(params, taus, "up")
    ode_lower = _envelope_curve(params, taus, "down")

    rows = []
    for index in range(lattice.n_levels):
        point = EnvelopePoint(tau=taus[index], upper=ode_upper[index], lower=ode_lower[index])
        rows.append({
            "tau": float(point.tau),
            "tree_upper": float(tree_upper[index]),
            "tree_lower": float(tree_lower[index]),
            "ode_upper": float(point.upper),
            "ode_lower": float(point.lower),
        })
    return rows
