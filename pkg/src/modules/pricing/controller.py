import logging
import math
from typing import List, Optional, Tuple, Union

import numpy as np

from modules.lattice.controller import build_lattice, validate_tree_params
from schemas.lattice import CevParams, Lattice
from schemas.pricing import (
    ExerciseStyle,
    Greeks,
    OptionKind,
    PayoffSpec,
    PricingResult,
    TransitionWeights,
    WeightsMode,
)
from utils.config import get_lattice_config
from utils.exceptions import InadmissibleWeightsException, ValidationException

logger = logging.getLogger(__name__)

lattice_config = get_lattice_config()

ArrayLike = Union[float, np.ndarray]


def _exact_weights(
    lower: ArrayLike,
    middle: ArrayLike,
    upper: ArrayLike,
    params: CevParams,
    dt: float
) -> Tuple[ArrayLike, ArrayLike]:
    """
    FDM 三点格式的上下系数 h_{i+1}, h_{i-1}

    h_up   =  rΔtS/(S₊-S₋) + σ²S^βΔt/((S₊-S₋)(S₊-S))
    h_down = -rΔtS/(S₊-S₋) + σ²S^βΔt/((S₊-S₋)(S-S₋))
    """
    d_up = upper - middle
    d_down = middle - lower
    span = upper - lower
    drift = params.r * dt * middle / span
    variance = params.sigma ** 2 * middle ** params.beta * dt / span
    return drift + variance / d_up, -drift + variance / d_down


def _floor_mean_weights(
    lower: ArrayLike,
    middle: ArrayLike,
    upper: ArrayLike,
    params: CevParams,
    dt: float
) -> Tuple[ArrayLike, ArrayLike]:
    """
    下邻节点被截断且原式权重越界时使用：只匹配一阶矩

    h_up·S₊ + h_down·S₋ = S(1+rΔt)，h_up + h_down = 1，结果截到 [0,1]
    """
    h_up = np.clip((middle * (1.0 + params.r * dt) - lower) / (upper - lower), 0.0, 1.0)
    return h_up, 1.0 - h_up


def _approx_weights(prices: ArrayLike, params: CevParams, dt: float) -> Tuple[ArrayLike, ArrayLike]:
    """
    近似概率 p = e^{rΔt}/(1+rΔt)·(½ + ½ r√Δt S^{1-β/2}/σ)，q 为对应的下行项，p+q = e^{rΔt}/(1+rΔt)
    """
    scale = math.exp(params.r * dt) / (1.0 + params.r * dt)
    tilt = params.r * math.sqrt(dt) * prices ** (1.0 - params.beta / 2.0) / params.sigma
    return scale * (0.5 + 0.5 * tilt), scale * (0.5 - 0.5 * tilt)


def _inadmissible(
    lattice: Lattice,
    index: int,
    h_up: float,
    h_down: float,
    mode: WeightsMode
) -> InadmissibleWeightsException:
    # 主网格下标 g 在第 N 层对应节点 j = g
    detail = "inadmissible weights; increase n_steps" if mode == WeightsMode.EXACT_H \
        else "inadmissible probability; increase n_steps"
    return InadmissibleWeightsException(
        detail,
        context={
            "level": lattice.n_steps,
            "node": int(index),
            "price": float(lattice.grid[index]),
            "h_up": float(h_up),
            "h_down": float(h_down),
            "mode": mode.value,
        }
    )


def exact_weight_arrays(lattice: Lattice, params: CevParams) -> Tuple[np.ndarray, np.ndarray]:
    """
    主网格上每个位置的 exact-h 权重

    权重只依赖节点在主网格上的位置，所以每层复用同一组数组。两端没有完整三元组，取 NaN；
    下邻节点被截断的位置按原式计算后归一化，仍越界时改用一阶矩匹配的权重；
    截断节点自身不参与（由吸收规则定价）。

    Raises:
        InadmissibleWeightsException: 不与截断节点相邻的节点权重不在 (0,1) 内
    """
    grid = lattice.grid
    floored = lattice.floored
    h_up = np.full(grid.size, np.nan)
    h_down = np.full(grid.size, np.nan)
    if grid.size < 3:
        return h_up, h_down

    # 截断前缀内间距为0
    with np.errstate(divide="ignore", invalid="ignore"):
        inner_up, inner_down = _exact_weights(grid[:-2], grid[1:-1], grid[2:], params, lattice.dt)
    h_up[1:-1] = inner_up
    h_down[1:-1] = inner_down

    active = np.zeros(grid.size, dtype=bool)
    active[1:-1] = ~floored[1:-1]
    touches_floor = np.zeros(grid.size, dtype=bool)
    touches_floor[1:-1] = floored[:-2]
    renormalize = active & touches_floor
    if renormalize.any():
        total = h_up[renormalize] + h_down[renormalize]
        h_up[renormalize] /= total
        h_down[renormalize] /= total
        fallback = renormalize & ~((h_up > 0) & (h_up < 1) & (h_down > 0) & (h_down < 1))
        if fallback.any():
            index = np.flatnonzero(fallback)
            h_up[index], h_down[index] = _floor_mean_weights(
                grid[index - 1], grid[index], grid[index + 1], params, lattice.dt
            )
            logger.debug(f"截断边界旁 {index.size} 个节点改用一阶矩权重")

    bad = active & ~touches_floor & ~((h_up > 0) & (h_up < 1) & (h_down > 0) & (h_down < 1))
    if bad.any():
        index = int(np.flatnonzero(bad)[0])
        logger.error(f"exact-h 权重越界: g={index}, h_up={h_up[index]}, h_down={h_down[index]}")
        raise _inadmissible(lattice, index, h_up[index], h_down[index], WeightsMode.EXACT_H)

    clean = active & ~touches_floor
    if clean.any():
        drift = np.max(np.abs(h_up[clean] + h_down[clean] - 1.0))
        if drift > lattice_config['weight_sum_tol']:
            index = int(np.flatnonzero(clean)[np.argmax(np.abs(h_up[clean] + h_down[clean] - 1.0))])
            raise InadmissibleWeightsException(
                f"weight identity violated: |h_up + h_down - 1| = {drift:.3e}",
                context={"level": lattice.n_steps, "node": index, "price": float(lattice.grid[index])}
            )
    return h_up, h_down


def approx_weight_arrays(lattice: Lattice, params: CevParams) -> Tuple[np.ndarray, np.ndarray]:
    """主网格上每个位置的 approx-p 概率对 (p, q)，不归一化"""
    grid = lattice.grid
    p, q = _approx_weights(grid, params, lattice.dt)
    p = np.where(lattice.floored, np.nan, p)
    q = np.where(lattice.floored, np.nan, q)
    p[0] = q[0] = p[-1] = q[-1] = np.nan

    active = np.zeros(grid.size, dtype=bool)
    active[1:-1] = ~lattice.floored[1:-1]
    bad = active & ~((p > 0) & (p < 1) & (q > 0) & (q < 1))
    if bad.any():
        index = int(np.flatnonzero(bad)[0])
        logger.error(f"approx-p 概率越界: g={index}, p={p[index]}")
        raise _inadmissible(lattice, index, p[index], q[index], WeightsMode.APPROX_P)
    return p, q


def _weight_arrays(lattice: Lattice, params: CevParams, mode: WeightsMode) -> Tuple[np.ndarray, np.ndarray]:
    if WeightsMode(mode) == WeightsMode.EXACT_H:
        return exact_weight_arrays(lattice, params)
    return approx_weight_arrays(lattice, params)


def transition_weights_exact(lattice: Lattice, level: int, node: int, params: CevParams) -> TransitionWeights:
    """
    第 level 层节点 node 的 exact-h 权重，取自下一层同价位副本两侧的间距

    Raises:
        ValidationException: 节点位于最后一层或已被截断
        InadmissibleWeightsException: 权重不在 (0,1) 内
    """
    if level > lattice.n_steps:
        raise ValidationException(f"level {level} has no next level", field="level")
    index = lattice.grid_index(level, node)
    if lattice.floored[index]:
        raise ValidationException(
            f"node ({level}, {node}) is absorbed at the floor; it is valued by the absorption rule",
            field="node"
        )
    grid = lattice.grid
    h_up, h_down = _exact_weights(grid[index - 1], grid[index], grid[index + 1], params, lattice.dt)
    if lattice.floored[index - 1]:
        total = h_up + h_down
        h_up, h_down = h_up / total, h_down / total
        if not (0 < h_up < 1 and 0 < h_down < 1):
            h_up, h_down = _floor_mean_weights(grid[index - 1], grid[index], grid[index + 1], params, lattice.dt)
    elif not (0 < h_up < 1 and 0 < h_down < 1):
        raise InadmissibleWeightsException(
            "inadmissible weights; increase n_steps",
            context={"level": level, "node": node, "h_up": float(h_up), "h_down": float(h_down)}
        )
    return TransitionWeights(h_up=float(h_up), h_down=float(h_down), mode=WeightsMode.EXACT_H)


def up_probability_approx(node_price: float, params: CevParams, dt: float) -> float:
    """
    近似上行概率 p

    Raises:
        InadmissibleWeightsException: p 不在 (0,1) 内
    """
    if not node_price > 0:
        raise ValidationException("node price must be > 0", field="node_price")
    p, _ = _approx_weights(node_price, params, dt)
    if not 0 < p < 1:
        raise InadmissibleWeightsException(
            "inadmissible probability; increase n_steps",
            context={"price": node_price, "p": float(p)}
        )
    return float(p)


def _absorbed_value(payoff: PayoffSpec, style: ExerciseStyle, r: float, remaining: float) -> float:
    """吸收在0处的节点：看跌期权价值为（贴现的）执行价，看涨为0"""
    if payoff.kind == OptionKind.CALL:
        return 0.0
    if style == ExerciseStyle.AMERICAN:
        return payoff.strike
    return payoff.strike * math.exp(-r * remaining)


def price_option(
    lattice: Lattice,
    payoff: PayoffSpec,
    style: ExerciseStyle,
    params: CevParams,
    mode: WeightsMode = WeightsMode.EXACT_H
) -> PricingResult:
    """
    在可达节点上做倒向归纳

    第 i 层节点 (主网格下标 g) 的两个子节点是第 i+1 层的 g-1 与 g+1。
    exact-h 模式按 1/(1+rΔt) 贴现，approx-p 模式按 e^{-rΔt} 贴现且不归一化。
    美式期权逐节点取 max(立即行权, 继续持有)，相等时记为行权。
    """
    validate_tree_params(params)
    if lattice.s0 != params.s0:
        raise ValidationException("lattice was built from a different s0", field="--s0")
    style = ExerciseStyle(style)
    mode = WeightsMode(mode)
    n = lattice.n_steps
    dt = lattice.dt
    grid = lattice.grid
    floored = lattice.floored

    w_up, w_down = _weight_arrays(lattice, params, mode)
    discount = 1.0 / (1.0 + params.r * dt) if mode == WeightsMode.EXACT_H else math.exp(-params.r * dt)
    american = style == ExerciseStyle.AMERICAN

    terminal = lattice.reachable_indices(n + 1)
    values = payoff.intrinsic(grid[terminal])
    if payoff.kind == OptionKind.PUT:
        values[floored[terminal]] = payoff.strike
    else:
        values[floored[terminal]] = 0.0

    boundary: List[Tuple[int, float]] = []
    for level in range(n, 0, -1):
        nodes = lattice.reachable_indices(level)
        continuation = discount * (w_up[nodes] * values[1:] + w_down[nodes] * values[:-1])
        absorbed = floored[nodes]
        if absorbed.any():
            remaining = (n - level + 1) * dt
            continuation[absorbed] = _absorbed_value(payoff, style, params.r, remaining)

        if american:
            intrinsic = payoff.intrinsic(grid[nodes])
            exercise = (intrinsic >= continuation) & (intrinsic > 0)
            values = np.where(exercise, intrinsic, continuation)
            if absorbed.any():
                values[absorbed] = continuation[absorbed]
                exercise |= absorbed & (values > 0)
            if exercise.any():
                boundary.append((level - 1, float(grid[nodes][exercise].max())))
        else:
            values = continuation

    price = max(float(values[0]), 0.0)
    boundary.reverse()
    logger.info(
        f"定价完成: kind={payoff.kind.value}, style={style.value}, mode={mode.value}, "
        f"N={n}, price={price:.10g}"
    )
    return PricingResult(
        price=price,
        style=style,
        weights_mode=mode,
        n_steps=n,
        exercise_boundary=boundary if american else None,
    )


def terminal_distribution(
    lattice: Lattice,
    params: CevParams,
    mode: WeightsMode = WeightsMode.EXACT_H
) -> List[Tuple[float, float]]:
    """
    前向归纳得到到期可达节点的 (价格, 概率)，按价格升序

    使用归一化后的上行权重，因此总概率为1；截断节点的概率全部留在 eps_floor 处。
    """
    validate_tree_params(params)
    w_up, w_down = _weight_arrays(lattice, params, mode)
    with np.errstate(divide="ignore", invalid="ignore"):
        up_share = w_up / (w_up + w_down)
    up_share = np.where(lattice.floored, 0.0, up_share)

    mass = np.ones(1)
    for level in range(1, lattice.n_steps + 1):
        share = up_share[lattice.reachable_indices(level)]
        following = np.zeros(level + 1)
        following[:-1] += mass * (1.0 - share)
        following[1:] += mass * share
        mass = following

    terminal = lattice.reachable_indices(lattice.n_levels)
    prices = lattice.grid[terminal]
    absorbed = lattice.floored[terminal]

    distribution: List[Tuple[float, float]] = []
    if absorbed.any():
        distribution.append((float(lattice.eps_floor), float(mass[absorbed].sum())))
    distribution.extend(
        (float(price), float(weight)) for price, weight in zip(prices[~absorbed], mass[~absorbed])
    )
    return distribution


def terminal_density(
    distribution: List[Tuple[float, float]],
    eps_floor: float = 0.0
) -> List[Tuple[float, float, float]]:
    """
    把到期离散概率除以局部区间宽度得到密度，吸收点（价格 ≤ eps_floor）不计入

    Returns:
        [(价格, 概率, 密度), ...]
    """
    points = [(price, mass) for price, mass in distribution if price > eps_floor]
    if len(points) < 2:
        return [(price, mass, float("nan")) for price, mass in points]

    prices = np.array([price for price, _ in points])
    masses = np.array([mass for _, mass in points])
    widths = np.empty_like(prices)
    widths[1:-1] = (prices[2:] - prices[:-2]) / 2.0
    widths[0] = prices[1] - prices[0]
    widths[-1] = prices[-1] - prices[-2]
    return [
        (float(price), float(mass), float(mass / width))
        for price, mass, width in zip(prices, masses, widths)
    ]


def bump_greeks(
    params: CevParams,
    payoff: PayoffSpec,
    style: ExerciseStyle,
    maturity: float,
    n_steps: int,
    mode: WeightsMode = WeightsMode.EXACT_H,
    spot_bump: float = 0.01,
    vol_bump: float = 0.01,
    base_price: Optional[float] = None
) -> Greeks:
    """
    扰动重定价：s0 与 σ 各做相对中心差分

    Args:
        spot_bump: s0 的相对扰动幅度
        vol_bump: σ 的相对扰动幅度
        base_price: 已算好的未扰动价格，缺省时重新计算
    """
    def reprice(**changes) -> float:
        bumped = params.model_copy(update=changes)
        lattice = build_lattice(bumped, maturity, n_steps)
        return price_option(lattice, payoff, style, bumped, mode).price

    if base_price is None:
        base_price = reprice()
    ds = spot_bump * params.s0
    up = reprice(s0=params.s0 + ds)
    down = reprice(s0=params.s0 - ds)
    dsigma = vol_bump * params.sigma
    vega = (reprice(sigma=params.sigma + dsigma) - reprice(sigma=params.sigma - dsigma)) / (2.0 * dsigma)

    return Greeks(
        delta=(up - down) / (2.0 * ds),
        gamma=(up - 2.0 * base_price + down) / ds ** 2,
        vega=vega,
    )
