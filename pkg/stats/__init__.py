"""组水平统计模块"""
from .distributions import t_two_sided_p, f_sf
from .correction import fdr_bh, bonferroni, correct
from .inference import adjusted_ttest, oneway_anova, posthoc_ttests, PosthocReport, contrast_name
from .analysis import (
    family_analysis,
    measure_outcomes,
    static_outcomes,
    quantile_table,
    STAT_COLUMNS,
    QUANTILE_COLUMNS,
)

__all__ = [
    't_two_sided_p', 'f_sf',
    'fdr_bh', 'bonferroni', 'correct',
    'adjusted_ttest', 'oneway_anova', 'posthoc_ttests', 'PosthocReport', 'contrast_name',
    'family_analysis', 'measure_outcomes', 'static_outcomes', 'quantile_table',
    'STAT_COLUMNS', 'QUANTILE_COLUMNS',
]
