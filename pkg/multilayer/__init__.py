"""多层网络与多层模块度模块"""
from .network import (
    build_supra,
    concatenate_group,
    split_assignment,
    multilayer_modularity,
    supra_modularity_matrix,
    normalization,
)
from .louvain import louvain_multilayer, louvain_matrix, LouvainTrace, aggregate, quality, exact_labels, move_nodes
from .ensemble import run_ensemble, partition_similarity, ensemble_stability, grid_stability, grid_search, select_from_grid

__all__ = [
    'build_supra',
    'concatenate_group',
    'split_assignment',
    'multilayer_modularity',
    'supra_modularity_matrix',
    'normalization',
    'louvain_multilayer',
    'louvain_matrix',
    'LouvainTrace',
    'aggregate',
    'quality',
    'exact_labels',
    'move_nodes',
    'run_ensemble',
    'partition_similarity',
    'ensemble_stability',
    'grid_stability',
    'grid_search',
    'select_from_grid',
]
