"""类Louvain贪心多层模块度优化

在任意对称(稀疏)模块度矩阵B上工作：
  1. 局部移动：按随机顺序逐个尝试把节点移到使ΔQ最大的社区，直到没有正增益的移动；
  2. 聚合：把社区合并为超节点，B_agg = M^T B M，模块度保持不变；
  3. 细化：在每个社区内部单独优化，能提高Q就拆分，然后回到第1步。
前两个阶段交替进行，直到聚合层面不再合并，且原始节点层面没有改进移动；
细化找不到可拆分的社区时结束。节点数很小时直接穷举全部划分。
"""
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from scipy import sparse

# 处理相对导入问题
try:
    from .network import multilayer_modularity, normalization, supra_modularity_matrix
    from ..schema import CommunityAssignment, MultilayerNetwork, canonical_labels
    from ..utils.errors import InvalidParameterError
    from ..utils.seeding import SeedLike, make_rng
except (ImportError, ValueError):
    # 如果相对导入失败，使用绝对导入
    import sys
    from pathlib import Path
    current_file = Path(__file__).resolve()
    project_root = current_file.parent.parent
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))
    from multilayer.network import multilayer_modularity, normalization, supra_modularity_matrix
    from schema import CommunityAssignment, MultilayerNetwork, canonical_labels
    from utils.errors import InvalidParameterError
    from utils.seeding import SeedLike, make_rng

# ΔQ 接受阈值（归一化后），防止浮点噪声导致循环
MOVE_TOL = 1e-12
MAX_PASSES = 1000
# 不超过该节点数时穷举全部划分（Bell(8) = 4140）
EXACT_MAX_NODES = 8


@dataclass
class LouvainTrace:
    """优化过程记录：每个阶段结束时的Q值"""
    phases: List[str] = field(default_factory=list)
    q_values: List[float] = field(default_factory=list)

    def record(self, phase: str, q: float) -> None:
        self.phases.append(phase)
        self.q_values.append(q)


def quality(B: sparse.csr_matrix, labels: np.ndarray, two_mu: float) -> float:
    """给定划分在模块度矩阵B上的质量 Σ_{uv} B_uv δ(g_u, g_v) / 2μ"""
    agg = aggregate(B, canonical_labels(labels))
    return float(agg.diagonal().sum()) / two_mu


def aggregate(B: sparse.csr_matrix, labels: np.ndarray) -> sparse.csr_matrix:
    """
    把社区聚合为超节点

    Args:
        B: 模块度矩阵 [n × n]
        labels: 稠密标签 0..k-1

    Returns:
        B_agg = M^T B M，[k × k]
    """
    n = B.shape[0]
    k = int(labels.max()) + 1
    M = sparse.csr_matrix((np.ones(n), (np.arange(n), labels)), shape=(n, k))
    return (M.T @ B @ M).tocsr()


def move_nodes(
    B: sparse.csr_matrix,
    labels: np.ndarray,
    rng: np.random.Generator,
    two_mu: float,
) -> bool:
    """
    局部移动阶段（原地修改labels）

    每一轮按新的随机顺序遍历所有节点；候选社区为B中与节点有非零项的社区，
    以及一个空社区。只接受 ΔQ > MOVE_TOL 的移动。

    Args:
        B: 对称模块度矩阵（CSR）
        labels: 初始标签（取值需在0..n-1内）
        rng: 随机数生成器
        two_mu: 归一化常数2μ

    Returns:
        是否发生过移动
    """
    n = B.shape[0]
    indptr, indices, data = B.indptr, B.indices, B.data
    sizes = np.bincount(labels, minlength=n)
    scale = 2.0 / two_mu
    moved_any = False
    for _ in range(MAX_PASSES):
        moved = False
        for u in rng.permutation(n):
            lo, hi = indptr[u], indptr[u + 1]
            idx = indices[lo:hi]
            vals = data[lo:hi]
            own = labels[u]
            not_self = idx != u
            cand, inv = np.unique(labels[idx[not_self]], return_inverse=True)
            sums = np.bincount(inv.ravel(), weights=vals[not_self], minlength=len(cand))
            pos = np.searchsorted(cand, own)
            own_sum = sums[pos] if pos < len(cand) and cand[pos] == own else 0.0
            gains = sums - own_sum
            best = int(np.argmax(gains)) if len(cand) else -1
            best_gain = gains[best] if best >= 0 else -np.inf
            target = cand[best] if best >= 0 else own
            # 独立成新社区
            if sizes[own] > 1 and -own_sum > best_gain:
                best_gain = -own_sum
                target = int(np.flatnonzero(sizes == 0)[0])
            if target != own and best_gain * scale > MOVE_TOL:
                sizes[own] -= 1
                sizes[target] += 1
                labels[u] = target
                moved = True
                moved_any = True
        if not moved:
            return moved_any
    raise RuntimeError("Louvain local moving did not converge")


@lru_cache(maxsize=None)
def restricted_growth_strings(n: int) -> np.ndarray:
    """
    n个元素的全部集合划分（受限增长串，每行一个划分，已是首次出现顺序）

    Args:
        n: 元素个数（>= 1）

    Returns:
        [Bell(n) × n] 整数数组（缓存共享，调用方不得修改）
    """
    rows = np.zeros((1, 1), dtype=np.int64)
    for _ in range(1, n):
        choices = rows.max(axis=1) + 2
        head = np.repeat(rows, choices, axis=0)
        tail = np.concatenate([np.arange(c) for c in choices])
        rows = np.column_stack([head, tail])
    return rows


def exact_labels(B: sparse.csr_matrix, two_mu: float) -> Tuple[np.ndarray, float]:
    """
    小图上穷举全部划分求模块度最大值

    Q相同时取枚举顺序中的第一个划分。

    Args:
        B: 对称模块度矩阵（节点数不超过EXACT_MAX_NODES）
        two_mu: 归一化常数

    Returns:
        (稠密标签, Q)
    """
    dense = sparse.csr_matrix(B).toarray()
    n = dense.shape[0]
    if n > EXACT_MAX_NODES:
        raise InvalidParameterError(f"exhaustive search is limited to {EXACT_MAX_NODES} nodes, got {n}")
    rows = restricted_growth_strings(n)
    iu, ju = np.triu_indices(n, k=1)
    same = rows[:, iu] == rows[:, ju]
    scores = (same @ (2.0 * dense[iu, ju]) + np.trace(dense)) / two_mu
    best = int(np.argmax(scores))
    return rows[best].copy(), float(scores[best])


def _move_and_aggregate(
    B: sparse.csr_matrix,
    labels: np.ndarray,
    rng: np.random.Generator,
    two_mu: float,
    trace: Optional[LouvainTrace],
) -> np.ndarray:
    """从给定划分出发交替执行局部移动与聚合，直到两者都不再改进"""
    while True:
        move_nodes(B, labels, rng, two_mu)
        labels = canonical_labels(labels)
        if trace is not None:
            trace.record("move", quality(B, labels, two_mu))
        level = aggregate(B, labels)
        membership = np.arange(level.shape[0])
        merged = False
        while True:
            sub = np.arange(level.shape[0])
            move_nodes(level, sub, rng, two_mu)
            sub = canonical_labels(sub)
            if sub.max() + 1 == level.shape[0]:
                break
            merged = True
            membership = sub[membership]
            level = aggregate(level, sub)
            if trace is not None:
                trace.record("aggregate", float(level.diagonal().sum()) / two_mu)
        labels = canonical_labels(membership[labels])
        if not merged:
            return labels


def split_communities(
    B: sparse.csr_matrix,
    labels: np.ndarray,
    rng: np.random.Generator,
    two_mu: float,
) -> Tuple[np.ndarray, bool]:
    """
    细化阶段：尝试拆分每个社区

    聚合后的超节点不能再被局部移动拆开。这里在每个社区的子矩阵上单独优化，
    若拆分后 Q 增加超过 MOVE_TOL 就采用拆分结果。

    Returns:
        (新标签, 是否发生拆分)
    """
    labels = labels.copy()
    next_label = int(labels.max()) + 1
    split_any = False
    for c in range(next_label):
        members = np.flatnonzero(labels == c)
        if members.size < 2:
            continue
        block = B[members][:, members]
        parts = louvain_matrix(block, two_mu, seed=rng, refine=False)
        if parts.max() == 0:
            continue
        gain = quality(block, parts, two_mu) - float(block.sum()) / two_mu
        if gain > MOVE_TOL:
            labels[members] = np.where(parts == 0, c, next_label + parts - 1)
            next_label += int(parts.max())
            split_any = True
    return canonical_labels(labels), split_any


def louvain_matrix(
    B: sparse.csr_matrix,
    two_mu: float,
    seed: SeedLike = None,
    trace: Optional[LouvainTrace] = None,
    refine: bool = True,
) -> np.ndarray:
    """
    在模块度矩阵上运行类Louvain优化

    不超过EXACT_MAX_NODES个节点时直接穷举（结果与种子无关）。
    否则从单点社区出发移动/聚合，再反复拆分社区并重新优化，直到拆分不再提高Q。

    Args:
        B: 对称模块度矩阵
        two_mu: 归一化常数
        seed: 随机种子（也可传入Generator）
        trace: 过程记录（可选）
        refine: 是否执行拆分细化

    Returns:
        稠密标签（首次出现顺序）
    """
    rng = make_rng(seed)
    B = sparse.csr_matrix(B)
    n = B.shape[0]
    if n <= EXACT_MAX_NODES:
        labels, q = exact_labels(B, two_mu)
        if trace is not None:
            trace.record("exact", q)
        return labels
    labels = _move_and_aggregate(B, np.arange(n), rng, two_mu, trace)
    if not refine:
        return labels
    for _ in range(MAX_PASSES):
        labels, split = split_communities(B, labels, rng, two_mu)
        if not split:
            return labels
        if trace is not None:
            trace.record("split", quality(B, labels, two_mu))
        labels = _move_and_aggregate(B, labels, rng, two_mu, trace)
    raise RuntimeError("Louvain refinement did not converge")


def louvain_multilayer(
    ml: MultilayerNetwork,
    seed: SeedLike = None,
    trace: Optional[LouvainTrace] = None,
) -> Tuple[CommunityAssignment, float]:
    """
    多层模块度的类Louvain贪心优化

    Args:
        ml: 多层网络
        seed: 随机种子（决定节点-层对的遍历顺序）
        trace: 过程记录（可选）

    Returns:
        (社区划分, Q_M)
    """
    B = supra_modularity_matrix(ml)
    two_mu = normalization(ml)
    labels = louvain_matrix(B, two_mu, seed=seed, trace=trace)
    ca = CommunityAssignment(labels.reshape(ml.n_layers, ml.n_nodes)).canonical()
    return ca, multilayer_modularity(ml, ca)
