"""静态模块度模块"""
from .threshold import threshold_by_density, n_retained
from .modularity import modularity_matrix, newman_modularity, signed_modularity
from .optimize import optimize_static_partition, best_static_partition, modularity_density_sweep

__all__ = [
    'threshold_by_density',
    'n_retained',
    'modularity_matrix',
    'newman_modularity',
    'signed_modularity',
    'optimize_static_partition',
    'best_static_partition',
    'modularity_density_sweep',
]
