"""静态与动态（滑动窗口）功能连接估计"""
import numpy as np

# 处理相对导入问题
try:
    from .correlation import weighted_correlation_matrix, fisher_z_matrix, positive_part
    from .taper import uniform_taper
    from ..schema import (
        ConnectivityKind,
        ConnectivityMatrix,
        DynamicConnectivity,
        TimeSeries,
        WindowTaper,
    )
    from ..utils.errors import InvalidParameterError
    from ..utils.logger import get_logger
except (ImportError, ValueError):
    # 如果相对导入失败，使用绝对导入
    import sys
    from pathlib import Path
    current_file = Path(__file__).resolve()
    project_root = current_file.parent.parent
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))
    from connectivity.correlation import weighted_correlation_matrix, fisher_z_matrix, positive_part
    from connectivity.taper import uniform_taper
    from schema import (
        ConnectivityKind,
        ConnectivityMatrix,
        DynamicConnectivity,
        TimeSeries,
        WindowTaper,
    )
    from utils.errors import InvalidParameterError
    from utils.logger import get_logger

logger = get_logger(__name__)


def n_windows(n_samples: int, width: int, step: int) -> int:
    """窗口数 T = floor((n_samples - W) / step) + 1"""
    if width > n_samples:
        raise InvalidParameterError(f"window width {width} exceeds {n_samples} samples")
    if step < 1:
        raise InvalidParameterError(f"step must be >= 1, got {step}")
    return (n_samples - width) // step + 1


def _to_layer(r: np.ndarray, context: str) -> ConnectivityMatrix:
    z = positive_part(fisher_z_matrix(r, context=context))
    return ConnectivityMatrix(values=z, kind=ConnectivityKind.FISHER_Z_POSITIVE)


def correlation_matrix(ts: TimeSeries) -> ConnectivityMatrix:
    """全扫描原始Pearson相关矩阵（kind=raw_r）"""
    r = weighted_correlation_matrix(ts.values, uniform_taper(ts.n_samples), ts.region_labels)
    return ConnectivityMatrix(values=r, kind=ConnectivityKind.RAW_R)


def static_fc(ts: TimeSeries) -> ConnectivityMatrix:
    """
    静态功能连接：全扫描Pearson相关 -> Fisher z -> 只保留正值

    Args:
        ts: 时间序列

    Returns:
        kind为fisher_z_positive的连接矩阵
    """
    r = weighted_correlation_matrix(ts.values, uniform_taper(ts.n_samples), ts.region_labels)
    return _to_layer(r, context=f"subject {ts.subject_id}".strip())


def dfc_estimate(ts: TimeSeries, taper: WindowTaper, step: int = 1) -> DynamicConnectivity:
    """
    滑动窗口动态功能连接估计

    第t个窗口使用采样点 [t*step, t*step + W)，按锥形权重计算相关，
    每层做Fisher z变换并只保留正值。

    Args:
        ts: 时间序列
        taper: 锥形窗
        step: 步长（采样点）

    Returns:
        DynamicConnectivity
    """
    width = taper.width
    total = n_windows(ts.n_samples, width, step)
    layers = []
    for t in range(total):
        start = t * step
        window = ts.values[start:start + width]
        r = weighted_correlation_matrix(window, taper, ts.region_labels, window=t)
        layers.append(_to_layer(r, context=f"subject {ts.subject_id} window {t}"))
    logger.debug("subject %s: %d windows (W=%d, step=%d)", ts.subject_id, total, width, step)
    return DynamicConnectivity(
        layers=layers,
        window_width=width,
        step=step,
        region_labels=list(ts.region_labels),
        subject_id=ts.subject_id,
    )
