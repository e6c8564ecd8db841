"""滑动窗口锥形权重"""
import numpy as np
from scipy.ndimage import gaussian_filter1d

# 处理相对导入问题
try:
    from ..schema import WindowTaper
    from ..utils.errors import InvalidParameterError
except (ImportError, ValueError):
    # 如果相对导入失败，使用绝对导入
    import sys
    from pathlib import Path
    current_file = Path(__file__).resolve()
    project_root = current_file.parent.parent
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))
    from schema import WindowTaper
    from utils.errors import InvalidParameterError

# 高斯核截断半径（以sigma为单位）
TRUNCATE_SIGMAS = 4.0


def make_taper(width: int, sigma: float) -> WindowTaper:
    """
    构造锥形窗：长度为width的全1矩形与单位面积高斯核的离散卷积，
    截取中间width个采样点后重新归一化为和为1

    Args:
        width: 窗口宽度（采样点）
        sigma: 高斯核标准差（采样点）

    Returns:
        WindowTaper
    """
    if int(width) != width or width < 2:
        raise InvalidParameterError(f"taper width must be an integer >= 2, got {width}")
    if not np.isfinite(sigma) or sigma <= 0:
        raise InvalidParameterError(f"taper sigma must be > 0, got {sigma}")
    width = int(width)
    # mode='constant' 等价于矩形外补零，输出即为完整卷积的中间width段
    smoothed = gaussian_filter1d(
        np.ones(width), sigma=float(sigma), mode="constant", cval=0.0, truncate=TRUNCATE_SIGMAS
    )
    # 强制精确对称
    smoothed = 0.5 * (smoothed + smoothed[::-1])
    weights = smoothed / smoothed.sum()
    return WindowTaper(weights=weights, sigma=float(sigma))


def uniform_taper(width: int) -> WindowTaper:
    """等权窗口（用于全扫描静态连接）"""
    if width < 2:
        raise InvalidParameterError(f"taper width must be >= 2, got {width}")
    return WindowTaper(weights=np.full(width, 1.0 / width), sigma=float("inf"))
