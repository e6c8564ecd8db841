"""集成平均与置换零模型归一化"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

# 处理相对导入问题
try:
    from .dynamic import (
        allegiance,
        flexibility,
        integration_between,
        integration_within,
        mean_allegiance,
        recruitment,
    )
    from ..multilayer.louvain import louvain_multilayer
    from ..schema import (
        CommunityAssignment,
        MeasureKind,
        MeasureTable,
        MeasureValue,
        MultilayerNetwork,
        SystemPartition,
        TargetLevel,
    )
    from ..utils.errors import InvalidParameterError, NormalizationDegenerateError, ShapeMismatchError
    from ..utils.logger import get_logger
    from ..utils.seeding import derive_rng, derive_seed
except (ImportError, ValueError):
    # 如果相对导入失败，使用绝对导入
    import sys
    from pathlib import Path
    current_file = Path(__file__).resolve()
    project_root = current_file.parent.parent
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))
    from measures.dynamic import (
        allegiance,
        flexibility,
        integration_between,
        integration_within,
        mean_allegiance,
        recruitment,
    )
    from multilayer.louvain import louvain_multilayer
    from schema import (
        CommunityAssignment,
        MeasureKind,
        MeasureTable,
        MeasureValue,
        MultilayerNetwork,
        SystemPartition,
        TargetLevel,
    )
    from utils.errors import InvalidParameterError, NormalizationDegenerateError, ShapeMismatchError
    from utils.logger import get_logger
    from utils.seeding import derive_rng, derive_seed

logger = get_logger(__name__)

# (指标类型, 对象层级, 对象名称)
MeasureKey = Tuple[MeasureKind, TargetLevel, str]


def pair_name(sys: SystemPartition, k: int, l: int) -> str:
    return f"{sys.system_names[k]}-{sys.system_names[l]}"


def measure_keys(sys: SystemPartition) -> List[MeasureKey]:
    """
    所有指标对象的固定顺序

    每种节点/系统级指标先列系统再列节点；系统对按(k < l)字典序。
    """
    regions = sys.region_labels or [str(i) for i in range(sys.n_regions)]
    keys: List[MeasureKey] = []
    for kind in (MeasureKind.RECRUITMENT, MeasureKind.INTEGRATION_WITHIN, MeasureKind.FLEXIBILITY):
        keys += [(kind, TargetLevel.SYSTEM, name) for name in sys.system_names]
        keys += [(kind, TargetLevel.NODE, label) for label in regions]
    for k in range(sys.n_systems):
        for l in range(k + 1, sys.n_systems):
            keys.append((MeasureKind.INTEGRATION_BETWEEN, TargetLevel.SYSTEM_PAIR, pair_name(sys, k, l)))
    keys.append((MeasureKind.ALLEGIANCE_MEAN, TargetLevel.WHOLE_BRAIN, "whole_brain"))
    return keys


def measure_vector(ca: CommunityAssignment, sys: SystemPartition, paper_scale: bool = False) -> np.ndarray:
    """
    单次划分的全部指标，顺序与measure_keys一致

    Args:
        ca: 社区划分
        sys: 功能系统划分
        paper_scale: 为True时系统级招募/整合按系统规模放大（1/n_S 缩放）

    Returns:
        一维数组
    """
    if ca.n_nodes != sys.n_regions:
        raise ShapeMismatchError(f"assignment has {ca.n_nodes} nodes, systems cover {sys.n_regions}")
    p = allegiance(ca)
    parts = []
    for values in (recruitment(p, sys), integration_within(p, sys), flexibility(ca, sys)):
        parts.append(values.system_paper_scale if paper_scale else values.system)
        parts.append(values.node)
    between = integration_between(p, sys)
    iu, ju = np.triu_indices(sys.n_systems, k=1)
    parts.append(between[iu, ju])
    parts.append([mean_allegiance(p)])
    return np.concatenate([np.asarray(x, dtype=float) for x in parts])


@dataclass
class MeasureSet:
    """一个被试的全部动态指标"""
    keys: List[MeasureKey]
    raw: np.ndarray
    raw_paper_scale: np.ndarray
    null_mean: Optional[np.ndarray] = None
    normalized: Optional[np.ndarray] = None
    subject_id: str = ""

    def tables(self) -> Dict[MeasureKind, MeasureTable]:
        """按指标类型整理为MeasureTable"""
        out: Dict[MeasureKind, MeasureTable] = {}
        for idx, (kind, level, target) in enumerate(self.keys):
            table = out.setdefault(kind, MeasureTable(kind=kind, subject_id=self.subject_id))
            norm = float(self.normalized[idx]) if self.normalized is not None else float("nan")
            table.values[f"{level.value}:{target}"] = MeasureValue(
                raw=float(self.raw[idx]),
                normalized=norm,
                raw_paper_scale=float(self.raw_paper_scale[idx]),
            )
            table.levels[f"{level.value}:{target}"] = level
        return out

    def value(self, kind: MeasureKind, level: TargetLevel, target: str, normalized: bool = False) -> float:
        idx = self.keys.index((kind, level, target))
        source = self.normalized if normalized else self.raw
        return float(source[idx])


def ensemble_measures(cas: Sequence[CommunityAssignment], sys: SystemPartition) -> MeasureSet:
    """
    对每次运行分别计算指标，再按运行编号顺序求算术平均

    Args:
        cas: 多次运行的社区划分
        sys: 功能系统划分

    Returns:
        MeasureSet（只含原始值）
    """
    if not cas:
        raise InvalidParameterError("ensemble is empty")
    shape = cas[0].labels.shape
    for ca in cas:
        if ca.labels.shape != shape:
            raise ShapeMismatchError("ensemble members differ in shape")
    raw = np.mean(np.stack([measure_vector(ca, sys) for ca in cas]), axis=0)
    paper = np.mean(np.stack([measure_vector(ca, sys, paper_scale=True) for ca in cas]), axis=0)
    return MeasureSet(keys=measure_keys(sys), raw=raw, raw_paper_scale=paper)


def permute_within_layers(ca: CommunityAssignment, rng: np.random.Generator) -> CommunityAssignment:
    """每层独立地随机置换节点身份"""
    T, N = ca.labels.shape
    perms = np.argsort(rng.random((T, N)), axis=1)
    return CommunityAssignment(np.take_along_axis(ca.labels, perms, axis=1))


def permutation_null(
    cas: Sequence[CommunityAssignment],
    sys: SystemPartition,
    n_perm: int,
    seed: int,
    progress: bool = False,
) -> np.ndarray:
    """
    置换零模型（划分置换模式）

    每次置换作用于集成中的每一次运行：第p次置换、第r次运行使用种子(seed, p, r)，
    每层独立置换节点身份后重新计算全部指标。先对置换求平均得到每次运行的零均值，
    再对运行等权平均；顺序与measure_keys一致。

    Args:
        cas: 多次运行的社区划分
        sys: 功能系统划分
        n_perm: 置换次数
        seed: 主种子
        progress: 是否显示进度条

    Returns:
        零分布均值向量
    """
    if n_perm < 1:
        raise InvalidParameterError("n_perm must be >= 1")
    if not cas:
        raise InvalidParameterError("ensemble is empty")
    per_run = np.zeros((len(cas), len(measure_keys(sys))))
    for p in tqdm(range(n_perm), disable=not progress, desc="permutation null"):
        for r, ca in enumerate(cas):
            per_run[r] += measure_vector(permute_within_layers(ca, derive_rng(seed, p, r)), sys)
    return np.mean(per_run / n_perm, axis=0)


def redetect_null(
    ml: MultilayerNetwork,
    sys: SystemPartition,
    n_perm: int,
    seed: int,
    progress: bool = False,
) -> np.ndarray:
    """
    置换零模型（重新检测模式）

    每次置换在每层独立打乱连接矩阵的节点身份，重新运行一次多层模块度优化。
    """
    if n_perm < 1:
        raise InvalidParameterError("n_perm must be >= 1")
    T, N = ml.n_layers, ml.n_nodes
    total = np.zeros(len(measure_keys(sys)))
    for p in tqdm(range(n_perm), disable=not progress, desc="redetection null"):
        rng = derive_rng(seed, p)
        layers = np.empty_like(ml.layers)
        for l in range(T):
            perm = rng.permutation(N)
            layers[l] = ml.layers[l][np.ix_(perm, perm)]
        shuffled = MultilayerNetwork(layers=layers, gamma=ml.gamma, omega=ml.omega, coupling=ml.coupling)
        ca, _ = louvain_multilayer(shuffled, seed=derive_seed(seed, p, 1))
        total += measure_vector(ca, sys)
    return total / n_perm


def normalize(
    measures: MeasureSet, null_mean: np.ndarray, on_degenerate: str = "raise"
) -> MeasureSet:
    """
    归一化：原始值除以零分布均值

    Args:
        measures: 原始指标
        null_mean: 零分布均值
        on_degenerate: 零均值为0时的处理："raise" 报错，"nan" 置NaN并记录警告

    Returns:
        填好normalized的MeasureSet
    """
    null_mean = np.asarray(null_mean, dtype=float)
    if null_mean.shape != measures.raw.shape:
        raise ShapeMismatchError("null mean does not match measure vector")
    zero = null_mean <= 0
    if zero.any():
        kind, level, target = measures.keys[int(np.flatnonzero(zero)[0])]
        name = f"{kind.value}/{level.value}:{target}"
        if on_degenerate == "raise":
            raise NormalizationDegenerateError(f"null mean is 0 for {name}", target=name)
        logger.warning("subject %s: %d targets with zero null mean (first %s) set to NaN",
                       measures.subject_id, int(zero.sum()), name)
    with np.errstate(divide="ignore", invalid="ignore"):
        normalized = np.where(zero, np.nan, measures.raw / np.where(zero, 1.0, null_mean))
    measures.null_mean = null_mean
    measures.normalized = normalized
    return measures


def subject_measures(
    cas: Sequence[CommunityAssignment],
    sys: SystemPartition,
    n_perm: int,
    seed: int,
    null_mode: str = "assignment",
    ml: Optional[MultilayerNetwork] = None,
    on_degenerate: str = "raise",
    subject_id: str = "",
) -> MeasureSet:
    """
    单个被试：集成平均 + 置换归一化

    Args:
        cas: 集成划分
        sys: 功能系统划分
        n_perm: 置换次数
        seed: 主种子
        null_mode: "assignment" 或 "redetect"（后者需要ml）
        ml: 多层网络（redetect模式）
        on_degenerate: 见normalize
        subject_id: 被试编号

    Returns:
        MeasureSet
    """
    measures = ensemble_measures(cas, sys)
    measures.subject_id = subject_id
    if null_mode == "assignment":
        null_mean = permutation_null(cas, sys, n_perm, seed)
    elif null_mode == "redetect":
        if ml is None:
            raise InvalidParameterError("redetect null mode needs the multilayer network")
        null_mean = redetect_null(ml, sys, n_perm, seed)
    else:
        raise InvalidParameterError(f"unknown null mode '{null_mode}'")
    return normalize(measures, null_mean, on_degenerate=on_degenerate)
