"""按检验族组织的组水平分析与箱线图数据"""
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

# 处理相对导入问题
try:
    from .correction import bonferroni, fdr_bh
    from .inference import oneway_anova, posthoc_ttests
    from ..schema import CohortMetadata, DensityCurve, GROUP_ORDER, MeasureKind
    from ..utils.errors import InvalidParameterError, PipelineError, ShapeMismatchError
    from ..utils.logger import get_logger
except (ImportError, ValueError):
    # 如果相对导入失败，使用绝对导入
    import sys
    from pathlib import Path
    current_file = Path(__file__).resolve()
    project_root = current_file.parent.parent
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))
    from stats.correction import bonferroni, fdr_bh
    from stats.inference import oneway_anova, posthoc_ttests
    from schema import CohortMetadata, DensityCurve, GROUP_ORDER, MeasureKind
    from utils.errors import InvalidParameterError, PipelineError, ShapeMismatchError
    from utils.logger import get_logger

logger = get_logger(__name__)

STAT_COLUMNS = [
    "family", "target", "contrast", "test", "statistic", "dof", "dof2",
    "estimate", "p_raw", "p_fdr", "p_bonferroni", "rejected",
]

QUANTILE_COLUMNS = ["family", "target", "group", "min", "q1", "median", "q3", "max", "mean", "n"]


def _present_levels(meta: CohortMetadata) -> List:
    labels = meta.groups()
    return [g for g in GROUP_ORDER if np.sum(labels == g.value) >= 2]


def _drop_missing(y: np.ndarray, meta: CohortMetadata):
    keep = np.isfinite(y)
    if keep.all():
        return y, meta
    ids = [sid for sid, k in zip(meta.subject_ids, keep) if k]
    return y[keep], meta.subset(ids)


def family_analysis(
    family: str,
    outcomes: Mapping[str, Sequence[float]],
    meta: CohortMetadata,
    method: str = "fdr",
    alpha: float = 0.05,
    fdr_q: float = 0.05,
    equal_var: bool = True,
    gate: bool = True,
) -> pd.DataFrame:
    """
    对一个检验族内的每个对象做ANOVA和事后t检验，并做多重比较校正

    同一对比（如 severe_vs_control）在族内所有对象上构成一组p值，
    分别计算FDR与Bonferroni校正；rejected 按 method 指定的校正判定。
    被门控跳过的事后检验不输出，也不计入校正。NaN 结局（例如归一化退化）
    对应的被试在该对象上被剔除。

    Args:
        family: 检验族名称（如 "recruitment"）
        outcomes: {对象名: 每个被试的结局}，被试顺序与meta一致
        meta: 队列元数据
        method: "fdr" 或 "bonferroni"
        alpha: 显著性水平（ANOVA门控与Bonferroni）
        fdr_q: FDR水平
        equal_var: 见adjusted_ttest
        gate: 是否启用ANOVA门控

    Returns:
        DataFrame，列为STAT_COLUMNS
    """
    if method not in ("fdr", "bonferroni"):
        raise InvalidParameterError(f"unknown correction method '{method}'")
    rows: List[Dict] = []
    gated = 0
    for target, values in outcomes.items():
        y = np.asarray(values, dtype=float)
        if y.shape != (len(meta),):
            raise ShapeMismatchError(f"target {target}: {y.size} outcomes for {len(meta)} subjects")
        y, sub_meta = _drop_missing(y, meta)
        levels = _present_levels(sub_meta)
        if len(levels) < 2:
            logger.warning("%s/%s: fewer than 2 usable groups, skipped", family, target)
            continue
        try:
            report = posthoc_ttests(y, sub_meta, levels=levels, gate=gate, alpha=alpha,
                                    equal_var=equal_var)
        except PipelineError as e:
            logger.warning("%s/%s: test failed (%s)", family, target, e)
            continue
        gated += int(report.skipped)
        tests = [("anova", report.anova)] + [("ttest", r) for r in report.results]
        for test, result in tests:
            rows.append({
                "family": family,
                "target": target,
                "contrast": result.contrast,
                "test": test,
                "statistic": result.statistic,
                "dof": result.dof,
                "dof2": result.dof2,
                "estimate": result.estimate,
                "p_raw": result.p,
            })
    if gated:
        logger.warning("%s: post-hoc tests gated off for %d of %d targets", family, gated, len(outcomes))
    frame = pd.DataFrame(rows, columns=STAT_COLUMNS)
    if frame.empty:
        return frame
    frame["p_fdr"] = np.nan
    frame["p_bonferroni"] = np.nan
    frame["rejected"] = False
    for _, index in frame.groupby("contrast", sort=False).groups.items():
        p = frame.loc[index, "p_raw"].to_numpy()
        fdr_mask, p_fdr = fdr_bh(p, fdr_q)
        bon_mask, p_bon = bonferroni(p, alpha)
        frame.loc[index, "p_fdr"] = p_fdr
        frame.loc[index, "p_bonferroni"] = p_bon
        frame.loc[index, "rejected"] = fdr_mask if method == "fdr" else bon_mask
    frame["rejected"] = frame["rejected"].astype(bool)
    return frame


def measure_outcomes(measure_sets: Sequence, kind: MeasureKind, normalized: bool = True) -> Dict[str, np.ndarray]:
    """
    从每个被试的MeasureSet中取出某一类指标，按对象整理

    Returns:
        {"level:target": [n_subjects]}
    """
    if not measure_sets:
        return {}
    keys = [key for key in measure_sets[0].keys if key[0] == kind]
    out: Dict[str, np.ndarray] = {}
    for _, level, target in keys:
        out[f"{level.value}:{target}"] = np.array(
            [ms.value(kind, level, target, normalized=normalized) for ms in measure_sets]
        )
    return out


def static_outcomes(
    curves: Sequence[DensityCurve], density_subset: Optional[Sequence[float]] = None
) -> Dict[str, np.ndarray]:
    """
    静态模块度的检验对象：每个密度一个，外加所选密度子集上的均值

    Returns:
        {"density=0.04": [...], ..., "mean": [...]}
    """
    if not curves:
        return {}
    out: Dict[str, np.ndarray] = {}
    for i, d in enumerate(curves[0].densities):
        out[f"density={d:.2f}"] = np.array([c.q_values[i] for c in curves])
    out["mean"] = np.array([c.mean_over(density_subset) for c in curves])
    return out


def quantile_table(family: str, outcomes: Mapping[str, Sequence[float]], meta: CohortMetadata) -> pd.DataFrame:
    """
    箱线图数据：每个(对象, 组)的 min/q1/median/q3/max/mean/n

    Args:
        family: 指标族名称
        outcomes: {对象名: 每个被试的值}
        meta: 队列元数据

    Returns:
        DataFrame，列为QUANTILE_COLUMNS
    """
    labels = meta.groups()
    rows = []
    for target, values in outcomes.items():
        y = np.asarray(values, dtype=float)
        for g in GROUP_ORDER:
            yg = y[(labels == g.value) & np.isfinite(y)]
            if yg.size == 0:
                continue
            q = np.quantile(yg, [0.0, 0.25, 0.5, 0.75, 1.0])
            rows.append({
                "family": family, "target": target, "group": g.value,
                "min": q[0], "q1": q[1], "median": q[2], "q3": q[3], "max": q[4],
                "mean": float(yg.mean()), "n": int(yg.size),
            })
    return pd.DataFrame(rows, columns=QUANTILE_COLUMNS)
