"""相关系数与Fisher z变换"""
from typing import Optional, Sequence, Union

import numpy as np

# 处理相对导入问题
try:
    from ..schema import WindowTaper
    from ..utils.errors import DegenerateSignalError, DomainError, ShapeMismatchError
    from ..utils.logger import get_logger
except (ImportError, ValueError):
    # 如果相对导入失败，使用绝对导入
    import sys
    from pathlib import Path
    current_file = Path(__file__).resolve()
    project_root = current_file.parent.parent
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))
    from schema import WindowTaper
    from utils.errors import DegenerateSignalError, DomainError, ShapeMismatchError
    from utils.logger import get_logger

logger = get_logger(__name__)

# |r| 超过该值时截断后再做atanh
CLAMP_LIMIT = 1.0 - 1e-12
# 相对方差下限，低于该值视为常数信号
_DEGENERATE_RTOL = 1e-20


def _weights_of(w: Union[WindowTaper, np.ndarray]) -> np.ndarray:
    weights = w.weights if isinstance(w, WindowTaper) else np.asarray(w, dtype=float)
    return weights / weights.sum()


def weighted_pearson(x: np.ndarray, y: np.ndarray, w: Union[WindowTaper, np.ndarray]) -> float:
    """
    加权Pearson相关：加权协方差 / 加权标准差之积

    Args:
        x: 信号1
        y: 信号2
        w: 权重（WindowTaper或权重向量）

    Returns:
        相关系数，范围[-1, 1]
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    weights = _weights_of(w)
    if not (x.shape == y.shape == weights.shape):
        raise ShapeMismatchError(f"shapes differ: {x.shape}, {y.shape}, {weights.shape}")
    xc = x - weights @ x
    yc = y - weights @ y
    vx = weights @ (xc * xc)
    vy = weights @ (yc * yc)
    if _is_degenerate(vx, x, weights) or _is_degenerate(vy, y, weights):
        raise DegenerateSignalError("zero weighted variance")
    r = (weights @ (xc * yc)) / np.sqrt(vx * vy)
    return float(np.clip(r, -1.0, 1.0))


def _is_degenerate(var, x, weights) -> bool:
    scale = weights @ (x * x)
    return bool(var <= 0 or var <= _DEGENERATE_RTOL * scale)


def weighted_correlation_matrix(
    values: np.ndarray,
    w: Union[WindowTaper, np.ndarray],
    region_labels: Optional[Sequence[str]] = None,
    window: Optional[int] = None,
) -> np.ndarray:
    """
    所有区域两两之间的加权相关矩阵

    Args:
        values: [W × N] 信号矩阵
        w: 权重
        region_labels: 区域名称（用于报错）
        window: 窗口编号（用于报错）

    Returns:
        [N × N] 对称矩阵，对角线为0
    """
    values = np.asarray(values, dtype=float)
    weights = _weights_of(w)
    if values.shape[0] != weights.shape[0]:
        raise ShapeMismatchError(
            f"window has {values.shape[0]} samples but taper has {weights.shape[0]}"
        )
    centered = values - weights @ values
    cov = centered.T @ (weights[:, None] * centered)
    var = np.diag(cov).copy()
    scale = weights @ (values * values)
    bad = np.flatnonzero((var <= 0) | (var <= _DEGENERATE_RTOL * scale))
    if bad.size:
        idx = int(bad[0])
        name = region_labels[idx] if region_labels is not None else str(idx)
        where = f" in window {window}" if window is not None else ""
        raise DegenerateSignalError(
            f"region '{name}' has zero variance{where}", region=name, window=window
        )
    sd = np.sqrt(var)
    r = cov / np.outer(sd, sd)
    r = np.clip(r, -1.0, 1.0)
    r = 0.5 * (r + r.T)
    np.fill_diagonal(r, 0.0)
    return r


def fisher_z(r: float, clamp: bool = False) -> float:
    """
    Fisher z变换 atanh(r)

    Args:
        r: 相关系数
        clamp: 为True时 |r| >= 1-1e-12 截断并记录警告；否则 |r| >= 1 报错

    Returns:
        z值
    """
    r = float(r)
    if clamp:
        if abs(r) >= CLAMP_LIMIT:
            logger.warning("correlation %.15f clamped to +/-(1 - 1e-12) before Fisher z", r)
            r = float(np.copysign(CLAMP_LIMIT, r))
    elif not abs(r) < 1.0:
        raise DomainError(f"Fisher z undefined for |r| >= 1 (r = {r})")
    return float(np.arctanh(r))


def fisher_z_matrix(r: np.ndarray, context: str = "") -> np.ndarray:
    """
    对相关矩阵逐元素做Fisher z变换（对角线保持为0）

    饱和的相关系数会被截断并记录一条警告，而不是让整个被试失败。
    """
    r = np.asarray(r, dtype=float)
    off = ~np.eye(r.shape[0], dtype=bool)
    saturated = off & (np.abs(r) >= CLAMP_LIMIT)
    if saturated.any():
        i, j = np.argwhere(saturated)[0]
        logger.warning(
            "%d saturated correlations clamped%s (first at regions %d,%d)",
            int(saturated.sum()) // 2, f" {context}" if context else "", i, j,
        )
    z = np.arctanh(np.clip(r, -CLAMP_LIMIT, CLAMP_LIMIT))
    np.fill_diagonal(z, 0.0)
    return z


def positive_part(z: np.ndarray) -> np.ndarray:
    """只保留正值，负值置0"""
    out = np.where(z > 0, z, 0.0)
    np.fill_diagonal(out, 0.0)
    return out
