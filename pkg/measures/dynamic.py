"""基于忠诚度矩阵的动态指标：招募、整合、灵活性"""
from dataclasses import dataclass

import numpy as np

# 处理相对导入问题
try:
    from ..schema import AllegianceMatrix, CommunityAssignment, SystemPartition
    from ..utils.errors import ShapeMismatchError, UndefinedMeasureError, InvalidParameterError
except (ImportError, ValueError):
    # 如果相对导入失败，使用绝对导入
    import sys
    from pathlib import Path
    current_file = Path(__file__).resolve()
    project_root = current_file.parent.parent
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))
    from schema import AllegianceMatrix, CommunityAssignment, SystemPartition
    from utils.errors import ShapeMismatchError, UndefinedMeasureError, InvalidParameterError


@dataclass
class SystemNodeValues:
    """系统级与节点级取值"""
    system: np.ndarray  # [n_systems]，归一化形式，范围[0, 1]
    node: np.ndarray  # [N]
    system_paper_scale: np.ndarray  # [n_systems]，按系统规模放大的形式


def allegiance(ca: CommunityAssignment) -> AllegianceMatrix:
    """
    忠诚度矩阵 P_ij = (1/T) Σ_t a_ij^t

    Args:
        ca: 社区划分 [T × N]

    Returns:
        AllegianceMatrix（对角线为1）
    """
    g = ca.labels
    same = g[:, :, None] == g[:, None, :]
    return AllegianceMatrix(p=same.mean(axis=0), n_layers=ca.n_layers)


def _check(p: AllegianceMatrix, sys: SystemPartition) -> np.ndarray:
    P = p.p
    if P.shape != (sys.n_regions, sys.n_regions):
        raise ShapeMismatchError(
            f"allegiance matrix {P.shape} does not match {sys.n_regions} regions"
        )
    return P


def _indicator(sys: SystemPartition) -> np.ndarray:
    """[N × n_systems] 系统隶属指示矩阵"""
    return np.eye(sys.n_systems)[sys.assignment]


def recruitment(p: AllegianceMatrix, sys: SystemPartition) -> SystemNodeValues:
    """
    招募：系统内部ROI被分到同一社区的比例

    R_S = (1/n_S²) Σ_{i∈S} Σ_{j∈S} P_ij（含对角线）；
    R_i = (1/n_{S(i)}) Σ_{j∈S(i)} P_ij；
    按 1/n_S 缩放的形式为 n_S · R_S。

    Args:
        p: 忠诚度矩阵
        sys: 功能系统划分

    Returns:
        SystemNodeValues
    """
    P = _check(p, sys)
    S = _indicator(sys)
    n_s = sys.sizes().astype(float)
    block = S.T @ P @ S  # [n_sys × n_sys]，系统对之间的P之和
    system = np.diag(block) / n_s ** 2
    node = (P @ S)[np.arange(sys.n_regions), sys.assignment] / n_s[sys.assignment]
    return SystemNodeValues(system=system, node=node, system_paper_scale=system * n_s)


def integration_within(p: AllegianceMatrix, sys: SystemPartition) -> SystemNodeValues:
    """
    系统整合：系统内ROI与系统外ROI被分到同一社区的比例

    I_S = (1/(n_S (N - n_S))) Σ_{i∈S} Σ_{j∉S} P_ij；
    I_i = (1/(N - n_{S(i)})) Σ_{j∉S(i)} P_ij；
    按 1/(N - n_S) 缩放的形式为 n_S · I_S。
    """
    P = _check(p, sys)
    N = sys.n_regions
    n_s = sys.sizes().astype(float)
    if np.any(n_s >= N):
        full = sys.system_names[int(np.argmax(n_s))]
        raise UndefinedMeasureError(f"system '{full}' covers all regions; integration undefined")
    S = _indicator(sys)
    within = P @ S  # [N × n_sys]
    outside_node = P.sum(axis=1) - within[np.arange(N), sys.assignment]
    node = outside_node / (N - n_s[sys.assignment])
    outside_sys = S.T @ outside_node
    system = outside_sys / (n_s * (N - n_s))
    return SystemNodeValues(system=system, node=node, system_paper_scale=system * n_s)


def integration_between(p: AllegianceMatrix, sys: SystemPartition) -> np.ndarray:
    """
    系统间整合矩阵 I_{S_k S_l} = (1/(n_k n_l)) Σ_{i∈S_k} Σ_{j∈S_l} P_ij

    Returns:
        [n_sys × n_sys] 对称矩阵，对角线为NaN（系统内请用recruitment）
    """
    P = _check(p, sys)
    S = _indicator(sys)
    n_s = sys.sizes().astype(float)
    out = (S.T @ P @ S) / np.outer(n_s, n_s)
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, np.nan)
    return out


def integration_between_pair(p: AllegianceMatrix, sys: SystemPartition, k: int, l: int) -> float:
    """单个系统对之间的整合"""
    if k == l:
        raise InvalidParameterError("integration between a system and itself is recruitment")
    return float(integration_between(p, sys)[k, l])


def flexibility(ca: CommunityAssignment, sys: SystemPartition) -> SystemNodeValues:
    """
    灵活性：节点在相邻层之间改变社区的频率

    f_i = #{t : g_{i,t+1} != g_{i,t}} / (T - 1)；F_S 为系统内 f_i 的均值。

    Args:
        ca: 社区划分 [T × N]
        sys: 功能系统划分

    Returns:
        SystemNodeValues（两种缩放形式相同）
    """
    if ca.n_layers < 2:
        raise UndefinedMeasureError("flexibility needs at least 2 layers")
    if ca.n_nodes != sys.n_regions:
        raise ShapeMismatchError("assignment does not match system partition")
    g = ca.labels
    node = (g[1:] != g[:-1]).sum(axis=0) / (ca.n_layers - 1)
    system = (_indicator(sys).T @ node) / sys.sizes()
    return SystemNodeValues(system=system, node=node, system_paper_scale=system.copy())


def mean_allegiance(p: AllegianceMatrix) -> float:
    """全脑平均忠诚度（所有非对角节点对）"""
    P = p.p
    n = P.shape[0]
    return float((P.sum() - np.trace(P)) / (n * (n - 1)))
