"""测试公共夹具与穷举/逐项循环参照实现"""
import itertools
import sys
from pathlib import Path
from typing import Iterator, List

import numpy as np
import pytest

PROJECT_ROOT = Path(__file__).resolve().parent.parent
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from schema import (  # noqa: E402
    CohortMetadata,
    CommunityAssignment,
    Group,
    MultilayerNetwork,
    SubjectInfo,
    SystemPartition,
)
from multilayer.network import multilayer_modularity  # noqa: E402
from static_mod.modularity import newman_modularity  # noqa: E402


# ---------------------------------------------------------------------------
# 穷举参照
# ---------------------------------------------------------------------------

def set_partitions(n: int) -> Iterator[List[int]]:
    """枚举n个元素的全部集合划分（受限增长串）"""
    labels = [0] * n

    def rec(i: int, k: int):
        if i == n:
            yield list(labels)
            return
        for c in range(k + 1):
            labels[i] = c
            yield from rec(i + 1, max(k, c + 1))

    if n == 0:
        yield []
        return
    yield from rec(1, 1)


def exhaustive_static_max(w: np.ndarray, gamma: float = 1.0) -> float:
    return max(newman_modularity(w, np.array(p), gamma) for p in set_partitions(w.shape[0]))


def exhaustive_multilayer_max(ml: MultilayerNetwork) -> float:
    T, N = ml.n_layers, ml.n_nodes
    best = -np.inf
    for p in set_partitions(T * N):
        q = multilayer_modularity(ml, CommunityAssignment(np.array(p).reshape(T, N)))
        best = max(best, q)
    return best


# ---------------------------------------------------------------------------
# 逐项循环参照（动态指标）
# ---------------------------------------------------------------------------

def loop_allegiance(labels: np.ndarray) -> np.ndarray:
    T, N = labels.shape
    P = np.zeros((N, N))
    for i in range(N):
        for j in range(N):
            P[i, j] = sum(labels[t, i] == labels[t, j] for t in range(T)) / T
    return P


def loop_recruitment(P: np.ndarray, members: List[int]) -> float:
    n = len(members)
    return sum(P[i, j] for i in members for j in members) / (n * n)


def loop_integration(P: np.ndarray, members: List[int], others: List[int]) -> float:
    return sum(P[i, j] for i in members for j in others) / (len(members) * len(others))


def loop_flexibility(labels: np.ndarray, i: int) -> float:
    T = labels.shape[0]
    return sum(labels[t + 1, i] != labels[t, i] for t in range(T - 1)) / (T - 1)


# ---------------------------------------------------------------------------
# 夹具
# ---------------------------------------------------------------------------

@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_triangles() -> np.ndarray:
    w = np.zeros((6, 6))
    for a, b in itertools.combinations(range(3), 2):
        w[a, b] = w[b, a] = 1.0
        w[a + 3, b + 3] = w[b + 3, a + 3] = 1.0
    return w


@pytest.fixture
def small_systems() -> SystemPartition:
    return SystemPartition(np.array([0, 0, 1, 1, 2, 2]), ["A", "B", "C"],
                           [f"r{i}" for i in range(6)])


def make_cohort(groups: List[Group], ages=None, sexes=None, fds=None) -> CohortMetadata:
    n = len(groups)
    ages = ages if ages is not None else [50.0] * n
    sexes = sexes if sexes is not None else [0] * n
    fds = fds if fds is not None else [0.1] * n
    return CohortMetadata([
        SubjectInfo(f"s{i:02d}", g, float(a), int(s), float(f))
        for i, (g, a, s, f) in enumerate(zip(groups, ages, sexes, fds))
    ])
