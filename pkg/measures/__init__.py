"""动态指标模块"""
from .systems import (
    DEFAULT_SYSTEMS,
    default_region_labels,
    default_mapping,
    default_system_partition,
    resolve_system_partition,
    partition_from_blocks,
)
from .dynamic import (
    SystemNodeValues,
    allegiance,
    recruitment,
    integration_within,
    integration_between,
    integration_between_pair,
    flexibility,
    mean_allegiance,
)
from .ensemble import (
    MeasureSet,
    measure_keys,
    measure_vector,
    ensemble_measures,
    permute_within_layers,
    permutation_null,
    redetect_null,
    normalize,
    subject_measures,
)

__all__ = [
    'DEFAULT_SYSTEMS',
    'default_region_labels',
    'default_mapping',
    'default_system_partition',
    'resolve_system_partition',
    'partition_from_blocks',
    'SystemNodeValues',
    'allegiance',
    'recruitment',
    'integration_within',
    'integration_between',
    'integration_between_pair',
    'flexibility',
    'mean_allegiance',
    'MeasureSet',
    'measure_keys',
    'measure_vector',
    'ensemble_measures',
    'permute_within_layers',
    'permutation_null',
    'redetect_null',
    'normalize',
    'subject_measures',
]
