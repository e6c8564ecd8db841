"""按边密度阈值化"""
import math
from typing import Union

import numpy as np

# 处理相对导入问题
try:
    from ..schema import ConnectivityMatrix
    from ..utils.errors import EmptyGraphError, InvalidParameterError
except (ImportError, ValueError):
    # 如果相对导入失败，使用绝对导入
    import sys
    from pathlib import Path
    current_file = Path(__file__).resolve()
    project_root = current_file.parent.parent
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))
    from schema import ConnectivityMatrix
    from utils.errors import EmptyGraphError, InvalidParameterError


def n_retained(n_regions: int, density: float) -> int:
    """保留的节点对数 ⌈density · n(n-1)/2⌉"""
    n_pairs = n_regions * (n_regions - 1) // 2
    # 先四舍五入到1e-9，避免 0.5*6 = 3.0000000000000004 之类的误差
    return int(math.ceil(round(density * n_pairs, 9)))


def threshold_by_density(c: Union[ConnectivityMatrix, np.ndarray], density: float) -> ConnectivityMatrix:
    """
    保留权重最大的 ⌈density · n_pairs⌉ 个非对角节点对（保留原权重，不二值化）

    权重相同时按(i, j)字典序决定先后。

    Args:
        c: 连接矩阵
        density: 边密度 (0, 1]

    Returns:
        阈值化后的对称连接矩阵
    """
    if not (0 < density <= 1):
        raise InvalidParameterError(f"density must be in (0, 1], got {density}")
    values = c.values if isinstance(c, ConnectivityMatrix) else np.asarray(c, dtype=float)
    kind = c.kind if isinstance(c, ConnectivityMatrix) else None
    n = values.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    w = values[iu, ju]
    if not np.any(w != 0):
        raise EmptyGraphError("cannot threshold an all-zero matrix")
    keep = n_retained(n, density)
    # 主键：权重降序；次键：i升序；再次：j升序
    order = np.lexsort((ju, iu, -w))[:keep]
    out = np.zeros_like(values)
    out[iu[order], ju[order]] = w[order]
    out = out + out.T
    if kind is None:
        return ConnectivityMatrix(values=out)
    return ConnectivityMatrix(values=out, kind=kind)
