import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Tuple

import numpy as np

from schemas.lattice import CevParams
from schemas.mc import McConfig
from schemas.pricing import OptionKind
from utils.config import get_runtime_config
from utils.exceptions import ValidationException

logger = logging.getLogger(__name__)


def _block_normals(block_index: int, seed: int, n_paths: int, n_steps: int) -> np.ndarray:
    """
    第 block_index 块的标准正态抽样，形状 (n_paths, n_steps)

    Philox 的 key 由 (块号, 种子) 组成，所以每块的随机数只取决于种子和块号
    """
    key = np.array([block_index, seed], dtype=np.uint64)
    generator = np.random.Generator(np.random.Philox(key=key))
    return generator.standard_normal((n_paths, n_steps))


def _euler_terminal(params: CevParams, dt: float, shocks: np.ndarray) -> np.ndarray:
    """
    全截断 Euler 格式，价格一旦非正即吸收在0
    """
    drift = (params.r - params.q) * dt
    diffusion = params.sigma * math.sqrt(dt)
    half_beta = params.beta / 2.0
    prices = np.full(shocks.shape[0], params.s0, dtype=np.float64)
    alive = np.ones(shocks.shape[0], dtype=bool)
    for step in range(shocks.shape[1]):
        level = np.maximum(prices, 0.0)
        prices = np.where(alive, prices + drift * prices + diffusion * level ** half_beta * shocks[:, step], 0.0)
        alive &= prices > 0
        prices[~alive] = 0.0
    return prices


def simulate_terminal(
    params: CevParams,
    maturity: float,
    cfg: McConfig,
    threads: Optional[int] = None
) -> np.ndarray:
    """
    模拟 CEV 过程在到期日的价格

    路径按 cfg.block_size 分块，块内随机数由 (seed, 块号) 唯一确定，
    各块在线程池中并行计算并按块号顺序拼接，结果与线程数无关。
    使用对偶变量时前一半为 Z 路径、后一半为 -Z 路径，第 k 条与第 half+k 条成对。
    """
    if not maturity > 0:
        raise ValidationException("maturity must be > 0", field="--t")
    if threads is None:
        threads = get_runtime_config()['threads']

    dt = maturity / cfg.n_time_steps
    base_paths = cfg.n_paths // 2 if cfg.antithetic else cfg.n_paths
    block_size = cfg.block_size
    n_blocks = (base_paths + block_size - 1) // block_size

    def run_block(block_index: int) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        start = block_index * block_size
        count = min(block_size, base_paths - start)
        shocks = _block_normals(block_index, cfg.seed, count, cfg.n_time_steps)
        plus = _euler_terminal(params, dt, shocks)
        minus = _euler_terminal(params, dt, -shocks) if cfg.antithetic else None
        return plus, minus

    workers = max(1, min(threads, n_blocks))
    logger.info(
        f"蒙特卡洛模拟开始: paths={cfg.n_paths}, steps={cfg.n_time_steps}, "
        f"blocks={n_blocks}, threads={workers}, antithetic={cfg.antithetic}"
    )
    if workers == 1:
        blocks = [run_block(index) for index in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            blocks = list(executor.map(run_block, range(n_blocks)))

    terminal = np.concatenate([plus for plus, _ in blocks])
    if cfg.antithetic:
        terminal = np.concatenate([terminal] + [minus for _, minus in blocks])
    return terminal


def mc_european_price(
    params: CevParams,
    strike: float,
    maturity: float,
    kind: OptionKind,
    cfg: McConfig,
    threads: Optional[int] = None
) -> Tuple[float, float]:
    """
    蒙特卡洛欧式期权价格及其标准误

    对偶变量时标准误按每对的平均值计算
    """
    if strike < 0:
        raise ValidationException("strike must be ≥ 0", field="--strike")
    terminal = simulate_terminal(params, maturity, cfg, threads)
    if OptionKind(kind) == OptionKind.PUT:
        payoffs = np.maximum(strike - terminal, 0.0)
    else:
        payoffs = np.maximum(terminal - strike, 0.0)
    discounted = math.exp(-params.r * maturity) * payoffs

    if cfg.antithetic:
        half = discounted.size // 2
        samples = 0.5 * (discounted[:half] + discounted[half:])
    else:
        samples = discounted
    price = float(samples.mean())
    std_error = float(samples.std(ddof=1) / math.sqrt(samples.size))
    logger.info(f"蒙特卡洛定价完成: price={price:.8g}, std_error={std_error:.3g}")
    return price, std_error
