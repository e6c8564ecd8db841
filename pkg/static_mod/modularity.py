"""Newman模块度及其带符号版本"""
from typing import Union

import numpy as np

# 处理相对导入问题
try:
    from ..schema import ConnectivityMatrix, Partition
    from ..utils.errors import EmptyGraphError, InvalidParameterError, ShapeMismatchError
except (ImportError, ValueError):
    # 如果相对导入失败，使用绝对导入
    import sys
    from pathlib import Path
    current_file = Path(__file__).resolve()
    project_root = current_file.parent.parent
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))
    from schema import ConnectivityMatrix, Partition
    from utils.errors import EmptyGraphError, InvalidParameterError, ShapeMismatchError

MatrixLike = Union[ConnectivityMatrix, np.ndarray]


def _values(w: MatrixLike) -> np.ndarray:
    return w.values if isinstance(w, ConnectivityMatrix) else np.asarray(w, dtype=float)


def _labels(p) -> np.ndarray:
    return p.labels if isinstance(p, Partition) else np.asarray(p, dtype=int)


def modularity_matrix(w: MatrixLike, gamma: float = 1.0) -> np.ndarray:
    """
    模块度矩阵 B = W - γ k k^T / (2m)

    Args:
        w: 非负加权邻接矩阵
        gamma: 分辨率参数

    Returns:
        [N × N] 模块度矩阵
    """
    W = _values(w)
    if np.min(W) < 0:
        raise InvalidParameterError("newman modularity needs non-negative weights")
    k = W.sum(axis=1)
    two_m = k.sum()
    if two_m <= 0:
        raise EmptyGraphError("graph has zero total weight")
    return W - gamma * np.outer(k, k) / two_m


def newman_modularity(w: MatrixLike, p, gamma: float = 1.0) -> float:
    """
    Newman加权模块度

    Q = (1/2m) Σ_ij [w_ij - γ k_i k_j / (2m)] δ(p_i, p_j)

    Args:
        w: 非负加权邻接矩阵
        p: 划分（Partition或标签向量）
        gamma: 分辨率参数

    Returns:
        Q
    """
    W = _values(w)
    labels = _labels(p)
    if labels.shape != (W.shape[0],):
        raise ShapeMismatchError(f"partition of size {labels.size} for {W.shape[0]} nodes")
    B = modularity_matrix(W, gamma)
    same = labels[:, None] == labels[None, :]
    return float(np.sum(B[same]) / W.sum())


def signed_modularity(w: MatrixLike, p, gamma: float = 1.0) -> float:
    """
    负权重对称处理的模块度 Q_sym = Q+ - Q-

    Q+ 为正权重子网的Newman Q，Q- 为负权重幅值子网的Newman Q，各自归一化；
    某一子网为空时对应项为0。

    Args:
        w: 可含负值的连接矩阵
        p: 划分
        gamma: 分辨率参数

    Returns:
        Q_sym
    """
    W = _values(w)
    pos = np.where(W > 0, W, 0.0)
    neg = np.where(W < 0, -W, 0.0)
    if not pos.any() and not neg.any():
        raise EmptyGraphError("both positive and negative subnetworks are empty")
    q_pos = newman_modularity(pos, p, gamma) if pos.any() else 0.0
    q_neg = newman_modularity(neg, p, gamma) if neg.any() else 0.0
    return q_pos - q_neg
