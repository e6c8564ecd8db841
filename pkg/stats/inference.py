"""组水平推断：协变量校正t检验、单因素方差分析、事后检验"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

# 处理相对导入问题
try:
    from .distributions import f_sf, t_two_sided_p
    from ..schema import CohortMetadata, GROUP_ORDER, Group, TestResult
    from ..utils.errors import CollinearityError, SampleSizeError, ShapeMismatchError
    from ..utils.logger import get_logger
except (ImportError, ValueError):
    # 如果相对导入失败，使用绝对导入
    import sys
    from pathlib import Path
    current_file = Path(__file__).resolve()
    project_root = current_file.parent.parent
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))
    from stats.distributions import f_sf, t_two_sided_p
    from schema import CohortMetadata, GROUP_ORDER, Group, TestResult
    from utils.errors import CollinearityError, SampleSizeError, ShapeMismatchError
    from utils.logger import get_logger

logger = get_logger(__name__)

COVARIATE_NAMES = ("age", "sex", "fd")


def _group_value(g) -> str:
    return g.value if isinstance(g, Group) else str(g)


def contrast_name(a, b) -> str:
    return f"{_group_value(b)}_vs_{_group_value(a)}"


def _ratio_statistic(estimate: float, se: float, scale: float) -> float:
    """estimate / se；se为0时按estimate是否为0给出0或±inf"""
    if se > 0:
        return estimate / se
    if abs(estimate) <= 1e-12 * max(scale, 1.0):
        return 0.0
    return float(np.copysign(np.inf, estimate))


def _covariate_block(covariates: np.ndarray) -> Tuple[np.ndarray, List[str]]:
    """去掉无变异的协变量列（已被截距吸收）"""
    keep = [j for j in range(covariates.shape[1]) if np.ptp(covariates[:, j]) > 0]
    return covariates[:, keep], [COVARIATE_NAMES[j] for j in keep]


def _ols(X: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float, int]:
    """
    最小二乘拟合

    Returns:
        (系数, (X'X)^-1, 残差平方和, 残差自由度)
    """
    n, k = X.shape
    if np.linalg.matrix_rank(X) < k:
        raise CollinearityError("design matrix is rank deficient")
    dof = n - k
    if dof <= 0:
        raise SampleSizeError(f"{n} observations for {k} parameters")
    xtx_inv = np.linalg.inv(X.T @ X)
    beta = xtx_inv @ (X.T @ y)
    resid = y - X @ beta
    return beta, xtx_inv, float(resid @ resid), dof


def _select(y, meta: CohortMetadata, groups) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float)
    if y.shape != (len(meta),):
        raise ShapeMismatchError(f"{y.size} outcomes for {len(meta)} subjects")
    labels = meta.groups()
    a, b = (_group_value(g) for g in groups)
    mask = (labels == a) | (labels == b)
    for g in (a, b):
        if np.sum(labels == g) < 2:
            raise SampleSizeError(f"group '{g}' has fewer than 2 subjects")
    indicator = (labels[mask] == b).astype(float)
    return y[mask], indicator, meta.covariates()[mask]


def adjusted_ttest(
    y: Sequence[float],
    meta: CohortMetadata,
    groups: Tuple = (Group.CONTROL, Group.SEVERE),
    equal_var: bool = True,
) -> TestResult:
    """
    协变量（年龄、性别、FD）校正的两样本t检验

    y 对 [截距, 组别指示, age, sex, fd] 做最小二乘，检验组别系数；
    组别指示为第二个组，t > 0 表示第二组更高。无变异的协变量会被去掉，
    此时退化为经典的合并方差t检验。

    equal_var=False 时先把y对协变量回归取残差，再做Welch t检验
    （Satterthwaite自由度）。

    Args:
        y: 每个被试的结局（与meta.subjects顺序一致）
        meta: 队列元数据
        groups: (参照组, 比较组)
        equal_var: 是否假设方差齐性

    Returns:
        TestResult
    """
    y_sel, indicator, covariates = _select(y, meta, groups)
    cov, _ = _covariate_block(covariates)
    name = contrast_name(*groups)
    scale = float(np.max(np.abs(y_sel))) if y_sel.size else 1.0
    n = y_sel.size
    if equal_var:
        X = np.column_stack([np.ones(n), indicator, cov])
        beta, xtx_inv, rss, dof = _ols(X, y_sel)
        se = float(np.sqrt(rss / dof * xtx_inv[1, 1]))
        t = _ratio_statistic(float(beta[1]), se, scale)
        return TestResult(statistic=t, p=t_two_sided_p(t, dof), dof=float(dof),
                          contrast=name, estimate=float(beta[1]))

    # Welch：协变量残差化
    Z = np.column_stack([np.ones(n), cov])
    beta, _, _, _ = _ols(Z, y_sel)
    resid = y_sel - Z @ beta
    ra, rb = resid[indicator == 0], resid[indicator == 1]
    va, vb = ra.var(ddof=1) / ra.size, rb.var(ddof=1) / rb.size
    diff = float(rb.mean() - ra.mean())
    se = float(np.sqrt(va + vb))
    t = _ratio_statistic(diff, se, scale)
    if va + vb > 0:
        dof = (va + vb) ** 2 / (va ** 2 / (ra.size - 1) + vb ** 2 / (rb.size - 1))
    else:
        dof = float(n - 2)
    return TestResult(statistic=t, p=t_two_sided_p(t, dof), dof=float(dof),
                      contrast=name, estimate=diff)


def oneway_anova(y: Sequence[float], groups: Sequence) -> TestResult:
    """
    单因素方差分析 F = MS_between / MS_within，自由度 (k-1, n-k)

    组内方差为0而组间不为0时 F = +inf、p = 0；全部数据相等时 F = 0、p = 1。

    Args:
        y: 观测值
        groups: 每个观测的组别

    Returns:
        TestResult
    """
    y = np.asarray(y, dtype=float)
    labels = np.array([_group_value(g) for g in groups])
    if y.shape != labels.shape:
        raise ShapeMismatchError("outcomes and group labels differ in length")
    levels = list(dict.fromkeys(labels))
    if len(levels) < 2:
        raise SampleSizeError("ANOVA needs at least 2 groups")
    for level in levels:
        if np.sum(labels == level) < 2:
            raise SampleSizeError(f"group '{level}' has fewer than 2 observations")
    n, k = y.size, len(levels)
    grand = y.mean()
    ss_between = 0.0
    ss_within = 0.0
    for level in levels:
        yg = y[labels == level]
        ss_between += yg.size * (yg.mean() - grand) ** 2
        ss_within += float(np.sum((yg - yg.mean()) ** 2))
    dof1, dof2 = k - 1, n - k
    contrast = "anova:" + ",".join(levels)
    tiny = 1e-24 * max(float(np.sum((y - grand) ** 2)), np.finfo(float).tiny)
    if ss_within <= tiny:
        if ss_between <= tiny:
            return TestResult(statistic=0.0, p=1.0, dof=float(dof1), contrast=contrast, dof2=float(dof2))
        return TestResult(statistic=float("inf"), p=0.0, dof=float(dof1), contrast=contrast,
                          dof2=float(dof2))
    f = (ss_between / dof1) / (ss_within / dof2)
    return TestResult(statistic=float(f), p=f_sf(f, dof1, dof2), dof=float(dof1),
                      contrast=contrast, dof2=float(dof2))


@dataclass
class PosthocReport:
    """事后检验结果"""
    results: List[TestResult] = field(default_factory=list)
    skipped: bool = False  # ANOVA门控未通过
    anova: Optional[TestResult] = None


def posthoc_ttests(
    y: Sequence[float],
    meta: CohortMetadata,
    levels: Sequence = GROUP_ORDER,
    gate: bool = True,
    alpha: float = 0.05,
    equal_var: bool = True,
) -> PosthocReport:
    """
    三组两两事后t检验（control-mild, control-severe, mild-severe）

    gate=True 时只有ANOVA显著（p < alpha）才执行，否则返回空列表并标记skipped。

    Args:
        y: 结局
        meta: 队列元数据
        levels: 组别顺序
        gate: 是否启用ANOVA门控
        alpha: 显著性水平
        equal_var: 见adjusted_ttest

    Returns:
        PosthocReport
    """
    y = np.asarray(y, dtype=float)
    labels = meta.groups()
    wanted = {_group_value(g) for g in levels}
    mask = np.array([g in wanted for g in labels])
    anova = oneway_anova(y[mask], labels[mask])
    if gate and not anova.p < alpha:
        logger.debug("post-hoc tests skipped: ANOVA p = %.4g", anova.p)
        return PosthocReport(results=[], skipped=True, anova=anova)
    results = []
    for i in range(len(levels)):
        for j in range(i + 1, len(levels)):
            results.append(adjusted_ttest(y, meta, (levels[i], levels[j]), equal_var=equal_var))
    return PosthocReport(results=results, skipped=False, anova=anova)
