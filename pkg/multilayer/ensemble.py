"""重复运行集成、划分相似度与γ/ω网格搜索"""
from itertools import combinations
from typing import Dict, List, Sequence

import numpy as np
from sklearn.metrics import normalized_mutual_info_score
from tqdm import tqdm

# 处理相对导入问题
try:
    from .network import build_supra
    from .louvain import louvain_multilayer
    from ..schema import CommunityAssignment, DynamicConnectivity, ModularityParams, MultilayerNetwork
    from ..utils.errors import InvalidParameterError, ShapeMismatchError
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
    from multilayer.network import build_supra
    from multilayer.louvain import louvain_multilayer
    from schema import CommunityAssignment, DynamicConnectivity, ModularityParams, MultilayerNetwork
    from utils.errors import InvalidParameterError, ShapeMismatchError
    from utils.logger import get_logger
    from utils.seeding import derive_seed

logger = get_logger(__name__)


def run_ensemble(
    ml: MultilayerNetwork, params: ModularityParams, progress: bool = False
) -> List[CommunityAssignment]:
    """
    重复运行多层模块度优化

    第r次运行的种子由(params.seed, r)派生，返回列表按运行编号排序。

    Args:
        ml: 多层网络
        params: 超参数（restarts决定运行次数）
        progress: 是否显示进度条

    Returns:
        社区划分列表
    """
    if params.restarts < 1:
        raise InvalidParameterError("restarts must be >= 1")
    runs = []
    for r in tqdm(range(params.restarts), disable=not progress, desc="ensemble"):
        ca, _ = louvain_multilayer(ml, seed=derive_seed(params.seed, r))
        runs.append(ca)
    return runs


def partition_similarity(a: CommunityAssignment, b: CommunityAssignment) -> float:
    """
    两个划分的归一化互信息（展平为T·N向量）

    Returns:
        [0, 1]，相同（允许重编号）时为1
    """
    if a.labels.shape != b.labels.shape:
        raise ShapeMismatchError(f"assignment shapes differ: {a.labels.shape} vs {b.labels.shape}")
    return float(normalized_mutual_info_score(a.labels.ravel(), b.labels.ravel()))


def ensemble_stability(runs: Sequence[CommunityAssignment]) -> float:
    """集成内两两NMI的均值（单次运行定义为1）"""
    if len(runs) < 2:
        return 1.0
    scores = [partition_similarity(a, b) for a, b in combinations(runs, 2)]
    return float(np.mean(scores))


def grid_stability(
    dfc: DynamicConnectivity,
    gamma_grid: Sequence[float],
    omega_grid: Sequence[float],
    restarts: int,
    seed: int,
) -> List[Dict[str, float]]:
    """
    计算网格中每个(γ, ω)的稳定性

    Returns:
        [{"gamma", "omega", "stability", "n_communities"}]，按γ、ω升序
    """
    if not gamma_grid or not omega_grid:
        raise InvalidParameterError("gamma and omega grids must be non-empty")
    table = []
    for gamma in sorted(gamma_grid):
        for omega in sorted(omega_grid):
            ml = build_supra(dfc, gamma=gamma, omega=omega)
            runs = run_ensemble(ml, ModularityParams(gamma, omega, restarts, seed))
            stability = ensemble_stability(runs)
            n_comm = float(np.mean([r.labels.max() + 1 for r in runs]))
            logger.info("grid gamma=%.3f omega=%.3f stability=%.4f", gamma, omega, stability)
            table.append({"gamma": float(gamma), "omega": float(omega),
                          "stability": stability, "n_communities": n_comm})
    return table


def select_from_grid(table: List[Dict[str, float]]) -> Dict[str, float]:
    """稳定性最高的格点；表按γ、ω升序，严格更高才替换，故并列时取较小的γ、ω"""
    if not table:
        raise InvalidParameterError("empty stability table")
    best = table[0]
    for row in table[1:]:
        if row["stability"] > best["stability"] + 1e-12:
            best = row
    return best


def grid_search(
    dfc: DynamicConnectivity,
    gamma_grid: Sequence[float],
    omega_grid: Sequence[float],
    restarts: int,
    seed: int,
) -> ModularityParams:
    """
    网格搜索γ/ω：选择集成稳定性（两两NMI均值）最高的格点，
    并列时取较小的γ，再取较小的ω

    Args:
        dfc: 动态功能连接
        gamma_grid: γ候选
        omega_grid: ω候选
        restarts: 每个格点的运行次数
        seed: 主种子

    Returns:
        ModularityParams
    """
    best = select_from_grid(grid_stability(dfc, gamma_grid, omega_grid, restarts, seed))
    return ModularityParams(gamma=best["gamma"], omega=best["omega"], restarts=restarts, seed=seed)
