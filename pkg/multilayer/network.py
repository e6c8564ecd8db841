"""时序多层网络构建与多层模块度"""
from typing import List, Sequence, Tuple

import numpy as np
from scipy import sparse

# 处理相对导入问题
try:
    from ..schema import (
        CommunityAssignment,
        ConnectivityKind,
        DynamicConnectivity,
        MultilayerNetwork,
    )
    from ..utils.errors import EmptyLayerError, InvalidParameterError, ShapeMismatchError
except (ImportError, ValueError):
    # 如果相对导入失败，使用绝对导入
    import sys
    from pathlib import Path
    current_file = Path(__file__).resolve()
    project_root = current_file.parent.parent
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))
    from schema import (
        CommunityAssignment,
        ConnectivityKind,
        DynamicConnectivity,
        MultilayerNetwork,
    )
    from utils.errors import EmptyLayerError, InvalidParameterError, ShapeMismatchError


def build_supra(dfc: DynamicConnectivity, gamma: float = 1.0, omega: float = 1.0) -> MultilayerNetwork:
    """
    由dFNC构建时序多层网络

    层间耦合为有序近邻（l <-> l±1）、统一强度ω，不显式构造稠密超邻接矩阵。

    Args:
        dfc: 动态功能连接（kind必须为fisher_z_positive）
        gamma: 层内分辨率参数γ
        omega: 层间耦合强度ω

    Returns:
        MultilayerNetwork
    """
    kind = dfc.layers[0].kind
    if kind != ConnectivityKind.FISHER_Z_POSITIVE:
        raise InvalidParameterError(f"multilayer network needs fisher_z_positive layers, got {kind.value}")
    return MultilayerNetwork(layers=dfc.stack(), gamma=float(gamma), omega=float(omega))


def concatenate_group(
    dfcs: Sequence[DynamicConnectivity], gamma: float = 1.0, omega: float = 1.0
) -> Tuple[MultilayerNetwork, List[int]]:
    """
    组拼接模式：按被试顺序堆叠所有层，被试边界处耦合为0

    Args:
        dfcs: 各被试的dFNC
        gamma: γ
        omega: ω

    Returns:
        (多层网络, 各被试层数)
    """
    if not dfcs:
        raise InvalidParameterError("no subjects to concatenate")
    n = dfcs[0].n_regions
    for d in dfcs:
        if d.n_regions != n:
            raise ShapeMismatchError("subjects differ in number of regions")
    layers = np.concatenate([d.stack() for d in dfcs], axis=0)
    counts = [d.n_layers for d in dfcs]
    coupling = np.full(layers.shape[0] - 1, float(omega))
    boundaries = np.cumsum(counts)[:-1] - 1
    coupling[boundaries] = 0.0
    return MultilayerNetwork(layers=layers, gamma=gamma, omega=omega, coupling=coupling), counts


def split_assignment(ca: CommunityAssignment, counts: Sequence[int]) -> List[CommunityAssignment]:
    """将组拼接的划分按被试拆回（各自重新编号）"""
    if sum(counts) != ca.n_layers:
        raise ShapeMismatchError("layer counts do not add up to the assignment")
    bounds = np.cumsum([0, *counts])
    return [
        CommunityAssignment(ca.labels[a:b]).canonical() for a, b in zip(bounds[:-1], bounds[1:])
    ]


def layer_strengths(ml: MultilayerNetwork) -> np.ndarray:
    """
    各层节点加权度 k_il 并检查空层

    Returns:
        [T × N] 加权度
    """
    k = ml.layers.sum(axis=2)
    two_m = k.sum(axis=1)
    empty = np.flatnonzero(two_m <= 0)
    if empty.size:
        l = int(empty[0])
        raise EmptyLayerError(f"layer {l} has zero total weight", layer=l)
    return k


def coupling_strengths(ml: MultilayerNetwork) -> np.ndarray:
    """每层每个节点的层间耦合和 c_jr（长度T，对所有节点相同）"""
    c = np.zeros(ml.n_layers)
    c[:-1] += ml.coupling
    c[1:] += ml.coupling
    return c


def normalization(ml: MultilayerNetwork) -> float:
    """2μ = Σ_jr (k_jr + c_jr)"""
    k = layer_strengths(ml)
    return float(k.sum() + ml.n_nodes * coupling_strengths(ml).sum())


def modularity_layers(ml: MultilayerNetwork) -> np.ndarray:
    """各层模块度矩阵 B_l = A_l - γ k_l k_l^T / (2 m_l)，其中 2 m_l = Σ_j k_jl"""
    k = layer_strengths(ml)
    two_m = k.sum(axis=1)
    return ml.layers - ml.gamma * k[:, :, None] * k[:, None, :] / two_m[:, None, None]


def multilayer_modularity(ml: MultilayerNetwork, ca: CommunityAssignment) -> float:
    """
    多层模块度 Q_M

    Q_M = (1/2μ) Σ_ijlr [(A_ijl - γ k_il k_jl / (2 m_l)) δ_lr + δ_ij ω_jlr] δ(g_il, g_jr)

    Args:
        ml: 多层网络
        ca: 社区划分 [T × N]

    Returns:
        Q_M
    """
    if ca.labels.shape != (ml.n_layers, ml.n_nodes):
        raise ShapeMismatchError(
            f"assignment shape {ca.labels.shape} != ({ml.n_layers}, {ml.n_nodes})"
        )
    B = modularity_layers(ml)
    g = ca.labels
    same = g[:, :, None] == g[:, None, :]
    intra = float(np.sum(B * same))
    inter = 0.0
    if ml.n_layers > 1:
        stay = (g[:-1] == g[1:]).sum(axis=1)
        inter = 2.0 * float(np.dot(ml.coupling, stay))
    return (intra + inter) / normalization(ml)


def supra_modularity_matrix(ml: MultilayerNetwork) -> sparse.csr_matrix:
    """
    稀疏超模块度矩阵（节点-层对 u = l*N + i）

    层内块为B_l，相邻层同一节点之间为ω。
    """
    T, N = ml.n_layers, ml.n_nodes
    B = modularity_layers(ml)
    blocks = sparse.block_diag([sparse.csr_matrix(B[l]) for l in range(T)], format="csr")
    if T == 1 or not np.any(ml.coupling):
        return blocks
    rows = np.arange((T - 1) * N)
    cols = rows + N
    vals = np.repeat(ml.coupling, N)
    keep = vals != 0
    coupling = sparse.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(T * N, T * N))
    return (blocks + coupling + coupling.T).tocsr()
