import csv
import logging
import math
import os
from typing import Dict, Iterable, List, Optional

from pydantic import ValidationError

from modules.analytic.special import ncx2_cdf, norm_cdf
from modules.lattice.controller import build_lattice
from modules.pricing.controller import price_option
from schemas.analytic import AnalyticInputs, Table1Row
from schemas.lattice import CevParams
from schemas.pricing import ExerciseStyle, OptionKind, PayoffSpec, WeightsMode
from utils.exceptions import FixtureException, GoldenMismatchException, ValidationException

logger = logging.getLogger(__name__)

BS_DISPATCH_TOL = 1e-9
RATE_SINGULARITY_TOL = 1e-12
TABLE1_COLUMNS = ["beta", "S", "E", "T", "analytic", "tree365", "tree730"]
TABLE1_STEPS = (365, 730)


def analytic_inputs(params: CevParams, strike: float, maturity: float) -> AnalyticInputs:
    """
    计算闭式解的参数组 (a, b, c, ω)

    ω = σ²/(2(r-q)(α-1))·[e^{2(r-q)(α-1)T} - 1]，r = q 时取极限 σ²T
    """
    alpha = params.alpha
    if abs(alpha - 1.0) < BS_DISPATCH_TOL / 2.0:
        raise ValidationException("b = 1/(1-alpha) diverges at beta = 2; use black_scholes_price", field="--beta")
    if not maturity > 0:
        raise ValidationException("maturity must be > 0", field="--t")
    if not strike > 0:
        raise ValidationException("strike must be > 0", field="--strike")

    carry = params.r - params.q
    z = 2.0 * carry * (alpha - 1.0) * maturity
    if abs(carry) < RATE_SINGULARITY_TOL:
        omega = params.sigma ** 2 * maturity * (1.0 + z / 2.0)
    else:
        omega = params.sigma ** 2 * maturity * math.expm1(z) / z

    scale = (1.0 - alpha) ** 2 * omega
    exponent = 2.0 * (1.0 - alpha)
    forward_strike = strike * math.exp(-carry * maturity)
    return AnalyticInputs(
        a=forward_strike ** exponent / scale,
        b=1.0 / (1.0 - alpha),
        c=params.s0 ** exponent / scale,
        omega=omega,
    )


def black_scholes_price(
    s0: float,
    strike: float,
    r: float,
    q: float,
    sigma_bs: float,
    maturity: float,
    kind: OptionKind = OptionKind.PUT
) -> float:
    """Black-Scholes 闭式解（带连续股息率）"""
    kind = OptionKind(kind)
    discounted_spot = s0 * math.exp(-q * maturity)
    if strike <= 0:
        return 0.0 if kind == OptionKind.PUT else discounted_spot
    discounted_strike = strike * math.exp(-r * maturity)
    vol_sqrt_t = sigma_bs * math.sqrt(maturity)
    d1 = (math.log(s0 / strike) + (r - q + 0.5 * sigma_bs ** 2) * maturity) / vol_sqrt_t
    d2 = d1 - vol_sqrt_t
    if kind == OptionKind.CALL:
        return discounted_spot * norm_cdf(d1) - discounted_strike * norm_cdf(d2)
    return discounted_strike * norm_cdf(-d2) - discounted_spot * norm_cdf(-d1)


def european_price_cev(
    params: CevParams,
    strike: float,
    maturity: float,
    kind: OptionKind = OptionKind.PUT
) -> float:
    """
    CEV 欧式期权闭式解

    β=2 走 Black-Scholes；β<2 用 Cox 公式；β>2 用 Emanuel–MacBeth 公式。结果在0处截断。
    """
    kind = OptionKind(kind)
    if strike <= 0:
        return 0.0 if kind == OptionKind.PUT else params.s0 * math.exp(-params.q * maturity)
    if abs(params.beta - 2.0) < BS_DISPATCH_TOL:
        price = black_scholes_price(params.s0, strike, params.r, params.q, params.sigma, maturity, kind)
        return max(price, 0.0)

    inputs = analytic_inputs(params, strike, maturity)
    a, b, c = inputs.a, inputs.b, inputs.c
    discounted_spot = params.s0 * math.exp(-params.q * maturity)
    discounted_strike = strike * math.exp(-params.r * maturity)

    if params.beta < 2:
        strike_term = ncx2_cdf(c, b, a)
        spot_term = ncx2_cdf(a, b + 2.0, c)
    else:
        strike_term = ncx2_cdf(a, 2.0 - b, c)
        spot_term = ncx2_cdf(c, -b, a)

    if kind == OptionKind.PUT:
        price = discounted_strike * (1.0 - strike_term) - discounted_spot * spot_term
    else:
        price = discounted_spot * (1.0 - spot_term) - discounted_strike * strike_term
    return max(price, 0.0)


def lognormal_pdf(x: float, s0: float, mu: float, sigma_bs: float, t: float) -> float:
    """
    对数正态密度 f(x) = 1/(xσ√(2πt))·exp(-(ln(x/S₀) - (μ - σ²/2)t)²/(2σ²t))
    """
    if not t > 0:
        raise ValidationException("t must be > 0", field="t")
    if x <= 0:
        return 0.0
    variance = sigma_bs ** 2 * t
    centered = math.log(x / s0) - (mu - 0.5 * sigma_bs ** 2) * t
    return math.exp(-centered ** 2 / (2.0 * variance)) / (x * math.sqrt(2.0 * math.pi * variance))


def load_table1(path: str) -> List[Table1Row]:
    """
    读取表1金标准CSV（列 beta,S,E,T,analytic,tree365,tree730）

    Raises:
        FixtureException: 文件不存在、列缺失或数值无效
    """
    if not os.path.exists(path):
        raise FixtureException(f"fixture file not found: {path}", error_code="FIXTURE_NOT_FOUND")

    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        missing = [column for column in TABLE1_COLUMNS if column not in (reader.fieldnames or [])]
        if missing:
            raise FixtureException(f"fixture {path} is missing columns: {', '.join(missing)}")
        rows = []
        for line_number, record in enumerate(reader, start=2):
            try:
                rows.append(Table1Row(**{column: float(record[column]) for column in TABLE1_COLUMNS}))
            except (TypeError, ValueError, ValidationError) as e:
                raise FixtureException(f"fixture {path} line {line_number} is malformed: {e}")

    if not rows:
        raise FixtureException(f"fixture {path} has no rows")
    logger.info(f"表1金标准已加载: {path}, {len(rows)} 行")
    return rows


def reproduce_table1(
    fixture_rows: Iterable[Table1Row],
    mode: WeightsMode = WeightsMode.APPROX_P,
    maturities: Optional[List[float]] = None,
    sigma: float = 0.2,
    r: float = 0.05
) -> List[Dict[str, float]]:
    """
    按金标准的每一行重新计算解析解与 N=365、730 的格点价格（欧式看跌）

    Raises:
        ValidationException: 到期时间过滤后没有任何一行
    """
    results = []
    for row in fixture_rows:
        if maturities and not any(math.isclose(row.T, maturity, rel_tol=1e-9) for maturity in maturities):
            continue
        params = CevParams(s0=row.S, sigma=sigma, beta=row.beta, r=r, q=0.0)
        payoff = PayoffSpec(kind=OptionKind.PUT, strike=row.E)
        record = {"beta": row.beta, "S": row.S, "E": row.E, "T": row.T}
        record["analytic"] = european_price_cev(params, row.E, row.T, OptionKind.PUT)
        for n_steps in TABLE1_STEPS:
            lattice = build_lattice(params, row.T, n_steps)
            record[f"tree{n_steps}"] = price_option(lattice, payoff, ExerciseStyle.EUROPEAN, params, mode).price
        for column in ("analytic", "tree365", "tree730"):
            record[f"fixture_{column}"] = getattr(row, column)
            record[f"delta_{column}"] = record[column] - getattr(row, column)
        results.append(record)
    if not results:
        if maturities:
            wanted = ", ".join(f"{maturity:g}" for maturity in maturities)
            raise ValidationException(f"no fixture row matches --maturity {wanted}", field="--maturity")
        raise ValidationException("fixture has no rows", field="--fixture")
    return results


def check_table1(
    results: List[Dict[str, float]],
    tree_tol: float = 0.001,
    analytic_tol: float = 0.0005
) -> List[Dict[str, float]]:
    """
    给每行补上 delta（相对容差最差的那一格的偏差）与 within 标记

    Raises:
        GoldenMismatchException: 任一格超出容差，信息中给出最差的一格
    """
    tolerances = {"analytic": analytic_tol, "tree365": tree_tol, "tree730": tree_tol}
    worst = None
    for record in results:
        ratios = {column: abs(record[f"delta_{column}"]) / tol for column, tol in tolerances.items()}
        column = max(ratios, key=ratios.get)
        record["delta"] = record[f"delta_{column}"]
        record["within"] = ratios[column] <= 1.0
        if worst is None or ratios[column] > worst[0]:
            worst = (ratios[column], column, record)

    if worst is not None and worst[0] > 1.0:
        _, column, record = worst
        detail = (
            f"table1 mismatch: worst cell beta={record['beta']}, S={record['S']}, T={record['T']}, "
            f"column={column}, value={record[column]:.6f}, fixture={record[f'fixture_{column}']:.4f}, "
            f"tolerance={tolerances[column]}"
        )
        raise GoldenMismatchException(
            detail,
            context={"beta": record["beta"], "S": record["S"], "T": record["T"], "column": column}
        )
    return results
