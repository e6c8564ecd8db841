"""合成队列：按组生成被试与协变量"""
from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

# 处理相对导入问题
try:
    from .generator import generate_subject
    from ..measures.systems import default_region_labels, default_system_partition
    from ..schema import (
        CohortMetadata,
        CohortSpec,
        CovariateDistribution,
        Epoch,
        Group,
        GroupSpec,
        Partition,
        PlantedDynamics,
        SubjectInfo,
        TimeSeries,
    )
    from ..utils.errors import InfeasibleSpecError
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
    from synth.generator import generate_subject
    from measures.systems import default_region_labels, default_system_partition
    from schema import (
        CohortMetadata,
        CohortSpec,
        CovariateDistribution,
        Epoch,
        Group,
        GroupSpec,
        Partition,
        PlantedDynamics,
        SubjectInfo,
        TimeSeries,
    )
    from utils.errors import InfeasibleSpecError
    from utils.logger import get_logger
    from utils.seeding import derive_rng, derive_seed

logger = get_logger(__name__)

DEFAULT_GROUP_SIZES: Dict[Group, int] = {Group.CONTROL: 15, Group.MILD: 6, Group.SEVERE: 9}


def apply_reduction(template: PlantedDynamics, reduction: Dict[int, float]) -> PlantedDynamics:
    """
    把招募下降因子作用到块内相关上：ρ_w' = ρ_b + factor · (ρ_w − ρ_b)

    factor = 1 不变，factor = 0 时该社区不再比跨社区更相关。
    """
    if not reduction:
        return template
    within = dict(template.block_within_corr)
    for block, factor in reduction.items():
        if not 0 <= factor <= 1:
            raise InfeasibleSpecError(f"reduction factor for block {block} must be in [0, 1], got {factor}")
        rho_w = template.block_corr(block)
        within[block] = template.between_corr + factor * (rho_w - template.between_corr)
    return replace(template, block_within_corr=within)


def _sample_covariates(dist: CovariateDistribution, rng: np.random.Generator) -> Tuple[float, int, float]:
    age = float(rng.normal(dist.age_mean, dist.age_sd))
    sex = int(rng.random() < dist.sex_ratio)
    fd = float(abs(rng.normal(dist.fd_mean, dist.fd_sd)))
    return age, sex, fd


def generate_cohort(
    spec: CohortSpec,
    seed: int,
    region_labels: Optional[Sequence[str]] = None,
) -> Tuple[List[TimeSeries], CohortMetadata]:
    """
    生成整个合成队列

    被试按组的顺序连续编号（sub-001, sub-002, ...）；第idx个被试的时间序列种子为
    derive_seed(seed, idx)，协变量由 derive_rng(seed, idx, 1) 抽取。

    Args:
        spec: 队列规格
        seed: 主种子
        region_labels: ROI名称（None时32个ROI用默认名称，否则按植入社区命名）

    Returns:
        (时间序列列表, 队列元数据)
    """
    series: List[TimeSeries] = []
    infos: List[SubjectInfo] = []
    idx = 0
    for group_spec in spec.groups:
        template = apply_reduction(group_spec.template, group_spec.recruitment_reduction)
        labels = region_labels
        if labels is None and template.n_regions == 32:
            labels = default_region_labels()
        for _ in range(group_spec.n_subjects):
            subject_id = f"sub-{idx + 1:03d}"
            ts = generate_subject(template, seed=derive_seed(seed, idx),
                                  region_labels=labels, subject_id=subject_id)
            age, sex, fd = _sample_covariates(group_spec.covariates, derive_rng(seed, idx, 1))
            series.append(ts)
            infos.append(SubjectInfo(subject_id=subject_id, group=group_spec.group,
                                     age=age, sex=sex, fd=fd))
            idx += 1
    logger.info("generated %d synthetic subjects in %d groups", idx, len(spec.groups))
    return series, CohortMetadata(infos)


def system_template(
    n_samples: int = 200,
    within_corr: float = 0.6,
    between_corr: float = 0.0,
    tr: float = 2.25,
) -> PlantedDynamics:
    """单时段模板：社区即默认的8个功能系统（32个ROI）"""
    systems = default_system_partition()
    partition = Partition(systems.assignment)
    return PlantedDynamics(
        n_regions=systems.n_regions,
        n_samples=n_samples,
        epochs=[Epoch(0, n_samples, partition)],
        within_corr=within_corr,
        between_corr=between_corr,
        tr=tr,
    )


def default_cohort_spec(
    n_samples: int = 200,
    sizes: Optional[Dict[Group, int]] = None,
    reduction: Optional[Dict[Group, Dict[int, float]]] = None,
    template: Optional[PlantedDynamics] = None,
) -> CohortSpec:
    """
    默认15/6/9（control/mild/severe）队列

    Args:
        n_samples: 每个被试的采样点数
        sizes: 各组人数
        reduction: {组: {社区编号: 因子}} 招募下降
        template: 自定义模板（默认system_template）

    Returns:
        CohortSpec
    """
    sizes = sizes or DEFAULT_GROUP_SIZES
    reduction = reduction or {}
    template = template or system_template(n_samples=n_samples)
    return CohortSpec(groups=[
        GroupSpec(group=g, n_subjects=sizes[g], template=template,
                  recruitment_reduction=dict(reduction.get(g, {})))
        for g in (Group.CONTROL, Group.MILD, Group.SEVERE)
        if g in sizes
    ])


def cohort_spec_from_dict(data: Dict) -> CohortSpec:
    """
    由JSON字典构造队列规格

    支持的字段：n_samples, within_corr, between_corr, tr,
    sizes {组名: 人数}, reduction {组名: {系统名或社区编号: 因子}}。
    系统名按默认8个功能系统的顺序解析为社区编号。

    Raises:
        InfeasibleSpecError: 字段取值非法
    """
    known = {"n_samples", "within_corr", "between_corr", "tr", "sizes", "reduction"}
    unknown = set(data) - known
    if unknown:
        raise InfeasibleSpecError(f"unknown cohort fields: {sorted(unknown)}")
    template = system_template(
        n_samples=int(data.get("n_samples", 200)),
        within_corr=float(data.get("within_corr", 0.6)),
        between_corr=float(data.get("between_corr", 0.0)),
        tr=float(data.get("tr", 2.25)),
    )
    system_names = default_system_partition().system_names
    try:
        sizes = {Group(k): int(v) for k, v in data.get("sizes", {}).items()} or None
        reduction: Dict[Group, Dict[int, float]] = {}
        for group, factors in data.get("reduction", {}).items():
            resolved = {}
            for key, factor in factors.items():
                block = system_names.index(key) if key in system_names else int(key)
                resolved[block] = float(factor)
            reduction[Group(group)] = resolved
    except ValueError as e:
        raise InfeasibleSpecError(f"invalid cohort spec: {e}") from e
    return default_cohort_spec(sizes=sizes, reduction=reduction, template=template)
