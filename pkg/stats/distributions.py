"""t分布与F分布尾概率（正则化不完全Beta函数）"""
import numpy as np
from scipy.special import betainc


def t_two_sided_p(t: float, dof: float) -> float:
    """
    双侧t检验p值 P(|T| >= |t|) = I_{ν/(ν+t²)}(ν/2, 1/2)

    Args:
        t: t统计量
        dof: 自由度

    Returns:
        p值
    """
    if np.isnan(t):
        return float("nan")
    if np.isinf(t):
        return 0.0
    x = dof / (dof + t * t)
    return float(min(1.0, max(0.0, betainc(0.5 * dof, 0.5, x))))


def f_sf(f: float, dof1: float, dof2: float) -> float:
    """
    F分布上尾概率 P(F >= f) = I_{d2/(d2+d1 f)}(d2/2, d1/2)
    """
    if np.isnan(f):
        return float("nan")
    if np.isinf(f):
        return 0.0
    if f <= 0:
        return 1.0
    x = dof2 / (dof2 + dof1 * f)
    return float(min(1.0, max(0.0, betainc(0.5 * dof2, 0.5 * dof1, x))))
