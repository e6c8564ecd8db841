"""数据模式定义

流水线中流转的全部领域类型：时间序列、连接矩阵、多层网络、社区划分、
忠诚度矩阵、指标表、统计结果以及合成数据规格。
"""
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple
from dataclasses import dataclass, field

import numpy as np

# 处理相对导入问题
try:
    from .utils.errors import (
        InvalidParameterError,
        ShapeMismatchError,
        InfeasibleSpecError,
    )
except (ImportError, ValueError):
    # 如果相对导入失败，使用绝对导入
    import sys
    from pathlib import Path
    current_file = Path(__file__).resolve()
    project_root = current_file.parent
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))
    from utils.errors import (
        InvalidParameterError,
        ShapeMismatchError,
        InfeasibleSpecError,
    )


class ConnectivityKind(str, Enum):
    """连接矩阵的数值类型"""
    RAW_R = "raw_r"  # 原始Pearson相关
    FISHER_Z = "fisher_z"  # Fisher z变换后
    FISHER_Z_POSITIVE = "fisher_z_positive"  # Fisher z变换后只保留正值


class MeasureKind(str, Enum):
    """动态指标类型"""
    RECRUITMENT = "recruitment"
    INTEGRATION_WITHIN = "integration_within"
    INTEGRATION_BETWEEN = "integration_between"
    FLEXIBILITY = "flexibility"
    ALLEGIANCE_MEAN = "allegiance_mean"  # 全脑平均忠诚度（零模型自检）


class TargetLevel(str, Enum):
    """指标的作用对象"""
    NODE = "node"
    SYSTEM = "system"
    SYSTEM_PAIR = "system_pair"
    WHOLE_BRAIN = "whole_brain"


class Group(str, Enum):
    """被试分组"""
    CONTROL = "control"
    MILD = "mild"
    SEVERE = "severe"


GROUP_ORDER: Tuple[Group, ...] = (Group.CONTROL, Group.MILD, Group.SEVERE)


# ---------------------------------------------------------------------------
# connectivity
# ---------------------------------------------------------------------------

@dataclass
class TimeSeries:
    """单个被试的ROI时间序列 [n_samples × n_regions]"""
    values: np.ndarray
    region_labels: List[str]
    sample_period: float = 2.25  # TR（秒）
    subject_id: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ShapeMismatchError(f"time series must be 2-D, got shape {self.values.shape}")
        n_samples, n_regions = self.values.shape
        if n_samples < 2 or n_regions < 2:
            raise InvalidParameterError(
                f"time series needs >= 2 samples and >= 2 regions, got {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise InvalidParameterError("time series contains non-finite values")
        self.region_labels = [str(label) for label in self.region_labels]
        if len(self.region_labels) != n_regions:
            raise ShapeMismatchError(
                f"{len(self.region_labels)} region labels for {n_regions} regions"
            )
        if len(set(self.region_labels)) != n_regions:
            raise InvalidParameterError("region labels must be unique")

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_regions(self) -> int:
        return self.values.shape[1]


@dataclass
class WindowTaper:
    """滑动窗口的锥形权重（矩形窗与高斯核卷积）"""
    weights: np.ndarray
    sigma: float

    @property
    def width(self) -> int:
        return len(self.weights)


@dataclass
class ConnectivityMatrix:
    """对称连接矩阵，对角线为0"""
    values: np.ndarray
    kind: ConnectivityKind = ConnectivityKind.FISHER_Z_POSITIVE

    @property
    def n_regions(self) -> int:
        return self.values.shape[0]


@dataclass
class DynamicConnectivity:
    """动态功能连接（dFNC）：按时间排列的连接矩阵层"""
    layers: List[ConnectivityMatrix]
    window_width: int
    step: int
    region_labels: List[str] = field(default_factory=list)
    subject_id: str = ""

    def __post_init__(self):
        if not self.layers:
            raise InvalidParameterError("dynamic connectivity needs at least one layer")
        n = self.layers[0].n_regions
        kind = self.layers[0].kind
        for t, layer in enumerate(self.layers):
            if layer.n_regions != n or layer.kind != kind:
                raise ShapeMismatchError(f"layer {t} differs in size or kind from layer 0")

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def n_regions(self) -> int:
        return self.layers[0].n_regions

    def stack(self) -> np.ndarray:
        """返回 [T × N × N] 数组"""
        return np.stack([layer.values for layer in self.layers])


# ---------------------------------------------------------------------------
# static_mod
# ---------------------------------------------------------------------------

@dataclass
class Partition:
    """静态社区划分，标签为0..k-1的稠密整数"""
    labels: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=int)
        if self.labels.ndim != 1:
            raise ShapeMismatchError("partition labels must be a vector")
        if self.labels.size and (self.labels.min() < 0 or
                                 len(np.unique(self.labels)) != self.labels.max() + 1):
            raise InvalidParameterError("partition ids must be dense 0..k-1")

    @property
    def n_communities(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0


@dataclass
class DensityCurve:
    """各边密度下的模块度"""
    densities: np.ndarray
    q_values: np.ndarray

    def __post_init__(self):
        self.densities = np.asarray(self.densities, dtype=float)
        self.q_values = np.asarray(self.q_values, dtype=float)
        if self.densities.shape != self.q_values.shape:
            raise ShapeMismatchError("densities and q_values differ in length")
        if np.any(np.diff(self.densities) <= 0):
            raise InvalidParameterError("densities must be strictly increasing")

    def mean_over(self, subset: Optional[Sequence[float]] = None) -> float:
        """
        计算所选密度子集上的平均模块度

        Args:
            subset: 选定的密度（None表示全部）

        Returns:
            平均Q值
        """
        if subset is None:
            return float(np.mean(self.q_values))
        mask = np.zeros(len(self.densities), dtype=bool)
        for d in subset:
            hits = np.isclose(self.densities, d, atol=1e-9)
            if not hits.any():
                raise InvalidParameterError(f"density {d} is not on the curve")
            mask |= hits
        return float(np.mean(self.q_values[mask]))


# ---------------------------------------------------------------------------
# multilayer
# ---------------------------------------------------------------------------

@dataclass
class MultilayerNetwork:
    """时序多层网络：层内加权图 + 相邻层同一节点间的耦合ω"""
    layers: np.ndarray  # [T × N × N]
    gamma: float = 1.0
    omega: float = 1.0
    # 每个相邻层边界上的耦合强度（长度T-1）；None表示统一为omega
    coupling: Optional[np.ndarray] = None

    def __post_init__(self):
        self.layers = np.asarray(self.layers, dtype=float)
        if self.layers.ndim != 3 or self.layers.shape[1] != self.layers.shape[2]:
            raise ShapeMismatchError(f"layers must be T x N x N, got {self.layers.shape}")
        if not (np.isfinite(self.gamma) and np.isfinite(self.omega)):
            raise InvalidParameterError("gamma and omega must be finite")
        if self.gamma <= 0 or self.omega < 0:
            raise InvalidParameterError("gamma must be > 0 and omega >= 0")
        if self.coupling is None:
            self.coupling = np.full(max(self.n_layers - 1, 0), float(self.omega))
        else:
            self.coupling = np.asarray(self.coupling, dtype=float)
            if self.coupling.shape != (max(self.n_layers - 1, 0),):
                raise ShapeMismatchError("coupling vector must have length T-1")

    @property
    def n_layers(self) -> int:
        return self.layers.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.layers.shape[1]


@dataclass
class CommunityAssignment:
    """多层社区划分 g_il，形状 [T × N]"""
    labels: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=int)
        if self.labels.ndim != 2:
            raise ShapeMismatchError("assignment must be a T x N matrix")

    @property
    def n_layers(self) -> int:
        return self.labels.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.labels.shape[1]

    def canonical(self) -> "CommunityAssignment":
        """按层优先遍历的首次出现顺序重新编号"""
        return CommunityAssignment(canonical_labels(self.labels))


def canonical_labels(labels: np.ndarray) -> np.ndarray:
    """
    将任意整数标签重编号为按首次出现顺序的 0..k-1

    Args:
        labels: 任意形状的整数标签数组（按C顺序遍历）

    Returns:
        同形状的稠密标签
    """
    labels = np.asarray(labels)
    flat = labels.ravel()
    if flat.size == 0:
        return labels.astype(int)
    _, first, inverse = np.unique(flat, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=int)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[inverse.ravel()].reshape(labels.shape)


@dataclass
class ModularityParams:
    """多层模块度超参数"""
    gamma: float = 1.0
    omega: float = 1.0
    restarts: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise InvalidParameterError("restarts must be >= 1")


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

@dataclass
class SystemPartition:
    """预定义功能系统划分"""
    assignment: np.ndarray  # region index -> system index
    system_names: List[str]
    region_labels: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.assignment = np.asarray(self.assignment, dtype=int)
        n_sys = len(self.system_names)
        if self.assignment.ndim != 1:
            raise ShapeMismatchError("system assignment must be a vector")
        if self.assignment.size and (self.assignment.min() < 0 or self.assignment.max() >= n_sys):
            raise InvalidParameterError("system ids out of range")
        counts = np.bincount(self.assignment, minlength=n_sys)
        if np.any(counts == 0):
            empty = [self.system_names[s] for s in np.flatnonzero(counts == 0)]
            raise InvalidParameterError(f"empty systems: {empty}")
        if self.region_labels and len(self.region_labels) != self.assignment.size:
            raise ShapeMismatchError("region labels do not match system assignment")

    @property
    def n_regions(self) -> int:
        return self.assignment.size

    @property
    def n_systems(self) -> int:
        return len(self.system_names)

    def members(self, s: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == s)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.n_systems)

    @classmethod
    def from_mapping(cls, region_labels: Sequence[str], mapping: Dict[str, str]) -> "SystemPartition":
        """由 {region label: system name} 构造，系统顺序为首次出现顺序"""
        names: List[str] = []
        assignment = []
        for label in region_labels:
            if label not in mapping:
                raise InvalidParameterError(f"region '{label}' has no system")
            name = mapping[label]
            if name not in names:
                names.append(name)
            assignment.append(names.index(name))
        return cls(np.array(assignment), names, list(region_labels))


@dataclass
class AllegianceMatrix:
    """忠诚度矩阵 P_ij：节点i、j被分到同一社区的层比例"""
    p: np.ndarray
    n_layers: int


@dataclass
class MeasureValue:
    """单个对象上的指标值"""
    raw: float
    normalized: float = float("nan")
    raw_paper_scale: float = float("nan")


@dataclass
class MeasureTable:
    """某一类指标在各对象上的取值"""
    kind: MeasureKind
    values: Dict[str, MeasureValue] = field(default_factory=dict)
    levels: Dict[str, TargetLevel] = field(default_factory=dict)
    subject_id: str = ""

    def targets(self) -> List[str]:
        return list(self.values.keys())

    def raw(self, target: str) -> float:
        return self.values[target].raw


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------

@dataclass
class SubjectInfo:
    """单个被试的分组和协变量"""
    subject_id: str
    group: Group
    age: float
    sex: int  # 0/1
    fd: float  # 平均帧位移（mm）


@dataclass
class CohortMetadata:
    """队列元数据"""
    subjects: List[SubjectInfo] = field(default_factory=list)

    def __post_init__(self):
        for s in self.subjects:
            if not np.all(np.isfinite([s.age, s.sex, s.fd])):
                raise InvalidParameterError(f"non-finite covariate for subject {s.subject_id}")
            if s.sex not in (0, 1):
                raise InvalidParameterError(f"sex must be 0/1 for subject {s.subject_id}")

    def __len__(self) -> int:
        return len(self.subjects)

    @property
    def subject_ids(self) -> List[str]:
        return [s.subject_id for s in self.subjects]

    def groups(self) -> np.ndarray:
        return np.array([s.group.value for s in self.subjects])

    def covariates(self) -> np.ndarray:
        """返回 [n × 3] 协变量矩阵（age, sex, fd）"""
        return np.array([[s.age, s.sex, s.fd] for s in self.subjects], dtype=float)

    def subset(self, subject_ids: Sequence[str]) -> "CohortMetadata":
        index = {s.subject_id: s for s in self.subjects}
        return CohortMetadata([index[sid] for sid in subject_ids])

    def to_dict(self) -> Dict[str, list]:
        return {
            "subjects": [
                {"subject_id": s.subject_id, "group": s.group.value,
                 "age": s.age, "sex": s.sex, "fd": s.fd}
                for s in self.subjects
            ]
        }

    @classmethod
    def from_dict(cls, data: Dict[str, list]) -> "CohortMetadata":
        return cls([
            SubjectInfo(
                subject_id=str(item["subject_id"]),
                group=Group(item["group"]),
                age=float(item["age"]),
                sex=int(item["sex"]),
                fd=float(item["fd"]),
            )
            for item in data["subjects"]
        ])


@dataclass
class TestResult:
    """单次检验结果"""
    statistic: float
    p: float
    dof: float
    contrast: str = ""
    estimate: float = float("nan")
    dof2: float = float("nan")  # F检验的分母自由度

    __test__ = False  # 避免被pytest当成测试类收集


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

@dataclass
class Epoch:
    """一段具有固定社区结构的时间区间 [start, end)"""
    start: int
    end: int
    partition: Partition


@dataclass
class PlantedDynamics:
    """植入社区动态的合成被试规格"""
    n_regions: int
    n_samples: int
    epochs: List[Epoch]
    within_corr: float = 0.6
    between_corr: float = 0.0
    tr: float = 2.25
    noise_seed: Optional[int] = None
    # 按社区编号覆盖块内相关（用于植入组间效应）
    block_within_corr: Dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if not (0 <= self.between_corr < self.within_corr < 1):
            raise InfeasibleSpecError(
                f"need 0 <= between_corr < within_corr < 1, got "
                f"{self.between_corr}, {self.within_corr}"
            )
        for block, rho in self.block_within_corr.items():
            if not (self.between_corr <= rho < 1):
                raise InfeasibleSpecError(f"block {block} within corr {rho} is infeasible")
        cursor = 0
        for epoch in sorted(self.epochs, key=lambda e: e.start):
            if epoch.start != cursor or epoch.end <= epoch.start:
                raise InvalidParameterError("epochs must tile [0, n_samples) without overlap")
            if epoch.partition.labels.size != self.n_regions:
                raise ShapeMismatchError("epoch partition size differs from n_regions")
            cursor = epoch.end
        if cursor != self.n_samples:
            raise InvalidParameterError("epochs must tile [0, n_samples) without overlap")

    def block_corr(self, block: int) -> float:
        return self.block_within_corr.get(block, self.within_corr)


@dataclass
class CovariateDistribution:
    """协变量分布"""
    age_mean: float = 60.0
    age_sd: float = 10.0
    sex_ratio: float = 0.5  # sex=1 的比例
    fd_mean: float = 0.15
    fd_sd: float = 0.05


@dataclass
class GroupSpec:
    """单个分组的合成规格"""
    group: Group
    n_subjects: int
    template: PlantedDynamics
    covariates: CovariateDistribution = field(default_factory=CovariateDistribution)
    # 社区编号 -> 块内相关缩放因子（<1 表示招募下降）
    recruitment_reduction: Dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.n_subjects < 2:
            raise InvalidParameterError(f"group {self.group.value} needs >= 2 subjects")


@dataclass
class CohortSpec:
    """合成队列规格"""
    groups: List[GroupSpec]

    @property
    def n_subjects(self) -> int:
        return sum(g.n_subjects for g in self.groups)
