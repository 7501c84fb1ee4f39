"""
特殊函数：正则化下不完全伽马函数、非中心卡方分布函数、标准正态分布函数

不完全伽马函数按 x < s+1 与否在级数展开和 Lentz 连分式之间切换；
非中心卡方分布函数是 Poisson 加权的中心卡方分布函数之和，从 Poisson 众数向两侧累加。
"""
import logging
import math
import sys

from utils.exceptions import ConvergenceException, ValidationException

logger = logging.getLogger(__name__)

EPS = sys.float_info.epsilon
FPMIN = sys.float_info.min / EPS
TAIL_TOL = 1e-13


def _gamma_iteration_cap(s: float) -> int:
    return int(2000 + 60 * math.sqrt(s))


def _not_converged(name: str, **context) -> ConvergenceException:
    logger.warning(f"{name} 未收敛: {context}")
    return ConvergenceException(f"{name} did not converge", context=context)


def _log_prefactor(s: float, x: float) -> float:
    return -x + s * math.log(x) - math.lgamma(s)


def _gamma_series(s: float, x: float) -> float:
    term = 1.0 / s
    total = term
    denominator = s
    for _ in range(_gamma_iteration_cap(s)):
        denominator += 1.0
        term *= x / denominator
        total += term
        if abs(term) < abs(total) * EPS:
            return total * math.exp(_log_prefactor(s, x))
    raise _not_converged("reg_lower_gamma series", s=s, x=x)


def _gamma_continued_fraction(s: float, x: float) -> float:
    """返回上不完全伽马 Q(s, x)"""
    b = x + 1.0 - s
    c = 1.0 / FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _gamma_iteration_cap(s) + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < FPMIN:
            d = FPMIN
        c = b + an / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return math.exp(_log_prefactor(s, x)) * h
    raise _not_converged("reg_lower_gamma continued fraction", s=s, x=x)


def reg_lower_gamma(s: float, x: float) -> float:
    """
    正则化下不完全伽马函数 P(s, x)

    Args:
        s: 形状参数，> 0
        x: 自变量，≥ 0

    Returns:
        [0, 1] 内的 P(s, x)

    Raises:
        ValidationException: 参数越界
        ConvergenceException: 超过迭代上限
    """
    if not s > 0:
        raise ValidationException(f"shape s must be > 0, got {s}", field="s")
    if not x >= 0:
        raise ValidationException(f"argument x must be ≥ 0, got {x}", field="x")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < s + 1.0:
        value = _gamma_series(s, x)
    else:
        value = 1.0 - _gamma_continued_fraction(s, x)
    return min(max(value, 0.0), 1.0)


def _poisson_log_weight(mean: float, j: int) -> float:
    return -mean + j * math.log(mean) - math.lgamma(j + 1.0)


def ncx2_cdf(x: float, k: float, lam: float) -> float:
    """
    非中心卡方分布函数 χ²(x; k, λ) = Σ_j Pois(j; λ/2)·P(k/2 + j, x/2)

    只在 Poisson 众数处计算一次 P，向两侧用递推
        P(s+1, y) = P(s, y) - y^s e^{-y}/Γ(s+1)
    并用几何级数界截断 Poisson 尾部（容差 1e-13）。
    """
    if not k > 0:
        raise ValidationException(f"degrees of freedom k must be > 0, got {k}", field="k")
    if not lam >= 0:
        raise ValidationException(f"noncentrality lambda must be ≥ 0, got {lam}", field="lambda")
    if x <= 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if lam == 0:
        return reg_lower_gamma(k / 2.0, x / 2.0)

    mean = lam / 2.0
    y = x / 2.0
    half_k = k / 2.0
    mode = int(math.floor(mean))
    cap = int(1000 + 100 * math.sqrt(mean))

    mode_weight = math.exp(_poisson_log_weight(mean, mode))
    mode_shape = half_k + mode
    mode_cdf = reg_lower_gamma(mode_shape, y)
    # g(s) = y^s e^{-y} / Γ(s+1)
    mode_step = math.exp(mode_shape * math.log(y) - y - math.lgamma(mode_shape + 1.0))

    total = mode_weight * mode_cdf

    # 向上：j = mode+1, mode+2, ...
    weight, cdf, step, shape = mode_weight, mode_cdf, mode_step, mode_shape
    j = mode
    for _ in range(cap):
        j += 1
        weight *= mean / j
        cdf = max(cdf - step, 0.0)
        step *= y / (shape + 1.0)
        shape += 1.0
        total += weight * cdf
        ratio = mean / (j + 1.0)
        if ratio < 1.0 and weight * cdf * ratio / (1.0 - ratio) < TAIL_TOL:
            break
        if weight == 0.0 or cdf == 0.0:
            break
    else:
        raise _not_converged("ncx2_cdf upper tail", x=x, k=k, lam=lam)

    # 向下：j = mode-1, ..., 0
    weight, cdf, step, shape = mode_weight, mode_cdf, mode_step, mode_shape
    j = mode
    iterations = 0
    while j > 0:
        iterations += 1
        if iterations > cap:
            raise _not_converged("ncx2_cdf lower tail", x=x, k=k, lam=lam)
        weight *= j / mean
        j -= 1
        shape -= 1.0
        step *= (shape + 1.0) / y
        cdf = min(cdf + step, 1.0)
        total += weight * cdf
        ratio = j / mean
        if ratio < 1.0 and weight * ratio / (1.0 - ratio) < TAIL_TOL:
            break

    return min(max(total, 0.0), 1.0)


def norm_cdf(x: float) -> float:
    """标准正态分布函数，由互补误差函数给出"""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))
