"""静态模块度优化与边密度扫描"""
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

# 处理相对导入问题
try:
    from .modularity import modularity_matrix, newman_modularity, MatrixLike, _values
    from .threshold import threshold_by_density
    from ..multilayer.louvain import louvain_matrix
    from ..schema import DensityCurve, Partition
    from ..utils.errors import InvalidParameterError
    from ..utils.logger import get_logger
    from ..utils.seeding import derive_seed
except (ImportError, ValueError):
    # 如果相对导入失败，使用绝对导入
    import sys
    from pathlib import Path
    current_file = Path(__file__).resolve()
    project_root = current_file.parent.parent
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))
    from static_mod.modularity import modularity_matrix, newman_modularity, MatrixLike, _values
    from static_mod.threshold import threshold_by_density
    from multilayer.louvain import louvain_matrix
    from schema import DensityCurve, Partition
    from utils.errors import InvalidParameterError
    from utils.logger import get_logger
    from utils.seeding import derive_seed

logger = get_logger(__name__)


def optimize_static_partition(
    w: MatrixLike, gamma: float = 1.0, rng_seed=None
) -> Tuple[Partition, float]:
    """
    单层类Louvain模块度优化（多层优化器在T=1时的特例）

    Args:
        w: 非负加权邻接矩阵
        gamma: 分辨率参数
        rng_seed: 随机种子

    Returns:
        (划分, Q)
    """
    W = _values(w)
    B = modularity_matrix(W, gamma)
    labels = louvain_matrix(sparse.csr_matrix(B), float(W.sum()), seed=rng_seed)
    partition = Partition(labels)
    return partition, newman_modularity(W, partition, gamma)


def best_static_partition(
    w: MatrixLike, gamma: float, seed: int, restarts: int, *index: int
) -> Tuple[Partition, float]:
    """
    多次重启取最优（Q相同时取编号最小的重启）

    Args:
        w: 邻接矩阵
        gamma: 分辨率参数
        seed: 主种子
        restarts: 重启次数
        *index: 附加到种子派生中的索引（如密度编号）

    Returns:
        (最优划分, 最优Q)
    """
    if restarts < 1:
        raise InvalidParameterError("restarts must be >= 1")
    best_p, best_q = None, -np.inf
    for r in range(restarts):
        p, q = optimize_static_partition(w, gamma, derive_seed(seed, *index, r))
        if q > best_q + 1e-12:
            best_p, best_q = p, q
    return best_p, best_q


def modularity_density_sweep(
    c: MatrixLike,
    densities: Sequence[float],
    gamma: float = 1.0,
    rng_seed: int = 0,
    restarts: int = 20,
) -> DensityCurve:
    """
    在多个边密度下计算静态模块度

    Args:
        c: 静态连接矩阵
        densities: 边密度列表（严格递增）
        gamma: 分辨率参数
        rng_seed: 主种子
        restarts: 每个密度的重启次数

    Returns:
        DensityCurve（平均值通过 mean_over 取所选密度子集）
    """
    densities = [float(d) for d in densities]
    if not densities:
        raise InvalidParameterError("density list is empty")
    q_values = []
    for d_idx, density in enumerate(densities):
        thresholded = threshold_by_density(c, density)
        _, q = best_static_partition(thresholded, gamma, rng_seed, restarts, d_idx)
        q_values.append(q)
        logger.debug("density %.3f: Q = %.6f", density, q)
    return DensityCurve(densities=np.array(densities), q_values=np.array(q_values))
