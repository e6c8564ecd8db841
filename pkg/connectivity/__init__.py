"""功能连接估计模块"""
from .taper import make_taper, uniform_taper
from .correlation import weighted_pearson, weighted_correlation_matrix, fisher_z, fisher_z_matrix, positive_part
from .dfc import static_fc, dfc_estimate, correlation_matrix, n_windows

__all__ = [
    'make_taper',
    'uniform_taper',
    'weighted_pearson',
    'weighted_correlation_matrix',
    'fisher_z',
    'fisher_z_matrix',
    'positive_part',
    'static_fc',
    'dfc_estimate',
    'correlation_matrix',
    'n_windows',
]
