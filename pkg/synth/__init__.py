"""合成数据模块"""
from .generator import (
    implied_correlation,
    check_feasible,
    generate_subject,
    block_partition,
    midpoint_switch,
)
from .cohort import (
    DEFAULT_GROUP_SIZES,
    apply_reduction,
    generate_cohort,
    system_template,
    default_cohort_spec,
    cohort_spec_from_dict,
)

__all__ = [
    'implied_correlation',
    'check_feasible',
    'generate_subject',
    'block_partition',
    'midpoint_switch',
    'DEFAULT_GROUP_SIZES',
    'apply_reduction',
    'generate_cohort',
    'system_template',
    'default_cohort_spec',
    'cohort_spec_from_dict',
]
