"""植入社区结构的合成时间序列（因子模型）

每个时段内，社区b中的ROI i：
    x_i = sqrt(ρ_b)·g + sqrt(ρ_w(b) − ρ_b)·f_b + sqrt(1 − ρ_w(b))·e_i
其中g为全局因子，f_b为社区因子，e_i为独立噪声，均为标准正态。
于是同社区ROI的期望相关为ρ_w(b)，跨社区为ρ_b，方差为1。
"""
from typing import List, Optional, Sequence

import numpy as np

# 处理相对导入问题
try:
    from ..schema import Epoch, Partition, PlantedDynamics, TimeSeries
    from ..utils.errors import InfeasibleSpecError
    from ..utils.logger import get_logger
    from ..utils.seeding import SeedLike, make_rng
except (ImportError, ValueError):
    # 如果相对导入失败，使用绝对导入
    import sys
    from pathlib import Path
    current_file = Path(__file__).resolve()
    project_root = current_file.parent.parent
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))
    from schema import Epoch, Partition, PlantedDynamics, TimeSeries
    from utils.errors import InfeasibleSpecError
    from utils.logger import get_logger
    from utils.seeding import SeedLike, make_rng

logger = get_logger(__name__)

PSD_TOL = 1e-10


def implied_correlation(spec: PlantedDynamics, partition: Partition) -> np.ndarray:
    """某一时段的期望相关矩阵"""
    labels = partition.labels
    same = labels[:, None] == labels[None, :]
    within = np.array([spec.block_corr(int(b)) for b in labels])
    corr = np.where(same, within[:, None], spec.between_corr)
    np.fill_diagonal(corr, 1.0)
    return corr


def check_feasible(spec: PlantedDynamics) -> None:
    """
    检查每个时段的期望相关矩阵是否半正定

    Raises:
        InfeasibleSpecError: 最小特征值小于 -PSD_TOL
    """
    for k, epoch in enumerate(spec.epochs):
        lam = float(np.linalg.eigvalsh(implied_correlation(spec, epoch.partition)).min())
        if lam < -PSD_TOL:
            raise InfeasibleSpecError(
                f"epoch {k}: implied correlation matrix is not PSD (min eigenvalue {lam:.3g})"
            )


def _sample_epoch(spec: PlantedDynamics, epoch: Epoch, rng: np.random.Generator) -> np.ndarray:
    n = epoch.end - epoch.start
    labels = epoch.partition.labels
    n_blocks = int(labels.max()) + 1
    rho_b = spec.between_corr
    rho_w = np.array([spec.block_corr(b) for b in range(n_blocks)])

    g = rng.standard_normal(n)
    f = rng.standard_normal((n, n_blocks))
    e = rng.standard_normal((n, spec.n_regions))

    shared = np.sqrt(rho_b) * g[:, None]
    block = np.sqrt(rho_w - rho_b)[labels] * f[:, labels]
    noise = np.sqrt(1.0 - rho_w)[labels] * e
    return shared + block + noise


def generate_subject(
    spec: PlantedDynamics,
    seed: SeedLike = None,
    region_labels: Optional[Sequence[str]] = None,
    subject_id: str = "",
) -> TimeSeries:
    """
    按规格生成一个被试的ROI时间序列

    Args:
        spec: 植入动态规格
        seed: 随机种子（None时使用spec.noise_seed）
        region_labels: ROI名称（默认按首个时段的社区命名为 "S<社区>.R<编号>"）
        subject_id: 被试编号

    Returns:
        TimeSeries [n_samples × n_regions]，同规格同种子逐位相同
    """
    check_feasible(spec)
    rng = make_rng(spec.noise_seed if seed is None else seed)
    parts = [_sample_epoch(spec, epoch, rng) for epoch in sorted(spec.epochs, key=lambda e: e.start)]
    if region_labels is None:
        first = min(spec.epochs, key=lambda e: e.start).partition.labels
        region_labels = [f"S{b}.R{i:02d}" for i, b in enumerate(first)]
    return TimeSeries(
        values=np.vstack(parts),
        region_labels=list(region_labels),
        sample_period=spec.tr,
        subject_id=subject_id,
    )


def block_partition(n_regions: int, n_blocks: int) -> Partition:
    """把ROI按顺序均分成n_blocks个连续块"""
    if not 1 <= n_blocks <= n_regions:
        raise InfeasibleSpecError(f"cannot split {n_regions} regions into {n_blocks} blocks")
    return Partition(np.arange(n_regions) * n_blocks // n_regions)


def midpoint_switch(
    n_regions: int,
    n_samples: int,
    switching: Sequence[int],
    n_blocks: int = 2,
    within_corr: float = 0.6,
    between_corr: float = 0.0,
    tr: float = 2.25,
) -> PlantedDynamics:
    """
    前后两个时段：后半段中switching里的ROI移到下一个社区

    Args:
        n_regions: ROI数
        n_samples: 采样点数
        switching: 在中点换社区的ROI下标
        n_blocks: 社区数
        within_corr: 社区内相关
        between_corr: 社区间相关
        tr: 采样间隔

    Returns:
        PlantedDynamics
    """
    first = block_partition(n_regions, n_blocks)
    second_labels = first.labels.copy()
    for i in switching:
        second_labels[i] = (second_labels[i] + 1) % n_blocks
    mid = n_samples // 2
    epochs: List[Epoch] = [
        Epoch(0, mid, first),
        Epoch(mid, n_samples, Partition(second_labels)),
    ]
    return PlantedDynamics(
        n_regions=n_regions,
        n_samples=n_samples,
        epochs=epochs,
        within_corr=within_corr,
        between_corr=between_corr,
        tr=tr,
    )
