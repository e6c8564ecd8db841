"""多重比较校正"""
from typing import Tuple

import numpy as np

# 处理相对导入问题
try:
    from ..utils.errors import InvalidParameterError
except (ImportError, ValueError):
    # 如果相对导入失败，使用绝对导入
    import sys
    from pathlib import Path
    current_file = Path(__file__).resolve()
    project_root = current_file.parent.parent
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))
    from utils.errors import InvalidParameterError


def _check_pvals(pvals) -> np.ndarray:
    p = np.asarray(pvals, dtype=float).ravel()
    if p.size == 0:
        raise InvalidParameterError("no p-values to correct")
    if np.any(np.isnan(p)) or np.any(p < 0) or np.any(p > 1):
        raise InvalidParameterError("p-values must lie in [0, 1]")
    return p


def fdr_bh(pvals, q: float = 0.05) -> Tuple[np.ndarray, np.ndarray]:
    """
    Benjamini-Hochberg 逐步向上FDR校正

    找到满足 p_(k) <= k q / m 的最大k，拒绝前k个；
    校正p值为 m p_(k) / k 的单调下包络（上限1）。

    Args:
        pvals: 原始p值
        q: FDR水平

    Returns:
        (拒绝掩码, 校正p值)，顺序与输入一致
    """
    p = _check_pvals(pvals)
    if not (0 < q < 1):
        raise InvalidParameterError(f"q must be in (0, 1), got {q}")
    m = p.size
    order = np.argsort(p, kind="mergesort")
    ranked = p[order]
    ranks = np.arange(1, m + 1)
    below = ranked <= ranks * q / m
    reject_sorted = np.zeros(m, dtype=bool)
    if below.any():
        k = int(np.flatnonzero(below).max())
        reject_sorted[:k + 1] = True
    adjusted_sorted = np.minimum.accumulate((m * ranked / ranks)[::-1])[::-1]
    adjusted_sorted = np.minimum(adjusted_sorted, 1.0)
    reject = np.empty(m, dtype=bool)
    adjusted = np.empty(m)
    reject[order] = reject_sorted
    adjusted[order] = adjusted_sorted
    return reject, adjusted


def bonferroni(pvals, alpha: float = 0.05) -> Tuple[np.ndarray, np.ndarray]:
    """
    Bonferroni校正：校正p值 = min(1, m p)，校正p值 < alpha 时拒绝

    Returns:
        (拒绝掩码, 校正p值)
    """
    p = _check_pvals(pvals)
    adjusted = np.minimum(1.0, p.size * p)
    return adjusted < alpha, adjusted


def correct(pvals, method: str, level: float = 0.05) -> Tuple[np.ndarray, np.ndarray]:
    """按名称选择校正方法（"fdr" 或 "bonferroni"）"""
    if method == "fdr":
        return fdr_bh(pvals, level)
    if method == "bonferroni":
        return bonferroni(pvals, level)
    raise InvalidParameterError(f"unknown correction method '{method}'")
