import math
import os
import sys

import numpy as np
import pytest
from pydantic import ValidationError

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from modules.analytic.controller import european_price_cev, load_table1
from modules.mc_oracle.controller import mc_european_price, simulate_terminal
from schemas.lattice import CevParams
from schemas.mc import McConfig
from schemas.pricing import OptionKind
from utils.config import get_fixture_path
from utils.exceptions import ValidationException


def _params(**overrides) -> CevParams:
    values = {"s0": 1.0, "sigma": 0.2, "beta": 1.0, "r": 0.05, "q": 0.0}
    values.update(overrides)
    return CevParams(**values)


def _config(**overrides) -> McConfig:
    values = {"n_paths": 20000, "n_time_steps": 100, "seed": 12345, "block_size": 4096}
    values.update(overrides)
    return McConfig(**values)


class TestSimulation:
    """路径模拟"""

    def test_same_seed_same_paths(self):
        cfg = _config(n_paths=5000, n_time_steps=50)
        first = simulate_terminal(_params(), 1.0, cfg, threads=1)
        second = simulate_terminal(_params(), 1.0, cfg, threads=1)
        assert np.array_equal(first, second)

    def test_independent_of_thread_count(self):
        """按块生成随机数，线程数不影响结果"""
        cfg = _config(n_paths=5000, n_time_steps=50, block_size=512)
        single = simulate_terminal(_params(), 1.0, cfg, threads=1)
        pooled = simulate_terminal(_params(), 1.0, cfg, threads=4)
        assert np.array_equal(single, pooled)

    def test_different_seed_different_paths(self):
        first = simulate_terminal(_params(), 1.0, _config(n_paths=1000, n_time_steps=10), threads=1)
        second = simulate_terminal(_params(), 1.0, _config(n_paths=1000, n_time_steps=10, seed=54321), threads=1)
        assert not np.array_equal(first, second)

    def test_vanishing_volatility(self):
        """σ→0 时每条路径都是确定的复利增长"""
        cfg = _config(n_paths=100, n_time_steps=365)
        terminal = simulate_terminal(_params(sigma=1e-300), 1.0, cfg, threads=1)
        expected = (1.0 + 0.05 / 365) ** 365
        assert np.allclose(terminal, expected, rtol=1e-12, atol=0.0)

    def test_absorbed_at_zero(self):
        cfg = _config(n_paths=4000, n_time_steps=200)
        terminal = simulate_terminal(_params(s0=0.2, sigma=0.5, beta=0.5), 1.0, cfg, threads=1)
        assert np.all(terminal >= 0.0)
        assert np.any(terminal == 0.0)

    def test_antithetic_layout(self):
        """对偶变量：前一半与后一半一一成对"""
        cfg = _config(n_paths=1000, n_time_steps=1, antithetic=True)
        terminal = simulate_terminal(_params(beta=2.0), 1.0, cfg, threads=1)
        assert terminal.size == 1000
        drift = 1.0 + 0.05
        assert np.allclose(terminal[:500] + terminal[500:], 2.0 * drift, rtol=1e-12)

    def test_martingale(self):
        params = _params(beta=2.0)
        terminal = simulate_terminal(params, 1.0, _config(n_paths=100000, n_time_steps=365), threads=2)
        std_error = terminal.std(ddof=1) / math.sqrt(terminal.size)
        assert abs(terminal.mean() - math.exp(0.05)) <= 3.0 * std_error

    def test_rejects_nonpositive_maturity(self):
        with pytest.raises(ValidationException):
            simulate_terminal(_params(), 0.0, _config(n_paths=10, n_time_steps=1))


class TestMcConfig:
    """模拟配置校验"""

    def test_antithetic_requires_even_paths(self):
        with pytest.raises(ValidationError):
            McConfig(n_paths=1001, n_time_steps=10, seed=1, antithetic=True)

    def test_antithetic_requires_two_pairs(self):
        with pytest.raises(ValidationError):
            McConfig(n_paths=2, n_time_steps=10, seed=1, antithetic=True)

    def test_seed_range(self):
        McConfig(n_paths=10, n_time_steps=1, seed=2 ** 64 - 1)
        with pytest.raises(ValidationError):
            McConfig(n_paths=10, n_time_steps=1, seed=-1)


class TestMcPricing:
    """蒙特卡洛欧式期权价格"""

    def test_zero_strike_put(self):
        price, std_error = mc_european_price(_params(), 0.0, 1.0, OptionKind.PUT, _config(n_paths=1000), threads=1)
        assert price == 0.0
        assert std_error == 0.0

    def test_negative_strike_rejected(self):
        with pytest.raises(ValidationException):
            mc_european_price(_params(), -1.0, 1.0, OptionKind.PUT, _config(n_paths=100), threads=1)

    def test_agrees_with_closed_form(self):
        """β=2 与 β=0.5 的平值看跌价格落在闭式解的 3 倍标准误内"""
        cfg = _config(n_paths=100000, n_time_steps=365)
        for beta in (2.0, 0.5):
            params = _params(beta=beta)
            price, std_error = mc_european_price(params, 1.0, 1.0, OptionKind.PUT, cfg, threads=2)
            analytic = european_price_cev(params, 1.0, 1.0, OptionKind.PUT)
            assert abs(price - analytic) <= 3.0 * std_error

    def test_antithetic_reduces_error(self):
        params = _params(beta=2.0)
        plain = mc_european_price(params, 1.0, 1.0, OptionKind.PUT, _config(), threads=1)
        paired = mc_european_price(params, 1.0, 1.0, OptionKind.PUT, _config(antithetic=True), threads=1)
        assert paired[1] < plain[1]

    @pytest.mark.slow
    def test_table1_rows(self):
        """表1每一行：10万条路径、365步的价格落在闭式解的 3 倍标准误内"""
        cfg = _config(n_paths=100000, n_time_steps=365)
        for row in load_table1(get_fixture_path()):
            params = _params(s0=row.S, beta=row.beta)
            price, std_error = mc_european_price(params, row.E, row.T, OptionKind.PUT, cfg)
            analytic = european_price_cev(params, row.E, row.T, OptionKind.PUT)
            # 深度虚值时标准误可能为0
            assert abs(price - analytic) <= 3.0 * std_error + 1e-6

    @pytest.mark.slow
    def test_statistical_consistency(self):
        """20 个种子里至少 95% 落在 3 倍标准误内"""
        cases = [(beta, s0) for beta in (0.5, 1.0, 2.0) for s0 in (0.5, 1.0)]
        hits = 0
        total = 0
        for beta, s0 in cases:
            params = _params(beta=beta, s0=s0)
            analytic = european_price_cev(params, 1.0, 0.5, OptionKind.PUT)
            for seed in range(20):
                cfg = _config(seed=seed, n_paths=20000, n_time_steps=100)
                price, std_error = mc_european_price(params, 1.0, 0.5, OptionKind.PUT, cfg)
                hits += abs(price - analytic) <= 3.0 * std_error
                total += 1
        assert hits >= 0.95 * total


if __name__ == "__main__":
    pytest.main(["-v", __file__])
