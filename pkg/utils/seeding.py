"""随机种子派生工具

所有并行单元（重复运行、置换、被试）的种子都由(主种子, 索引)确定性派生，
结果只依赖于输入和种子，与调度顺序无关。
"""
from typing import Sequence, Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence, None]


def derive_seed(seed: int, *indices: int) -> np.random.SeedSequence:
    """
    由主种子和索引派生子种子序列

    Args:
        seed: 主种子
        *indices: 索引（如重复运行编号、被试编号）

    Returns:
        SeedSequence
    """
    entropy: Sequence[int] = [int(seed) & 0xFFFFFFFFFFFFFFFF, *[int(i) for i in indices]]
    return np.random.SeedSequence(entropy)


def make_rng(seed: SeedLike) -> np.random.Generator:
    """由种子创建随机数生成器"""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def derive_rng(seed: int, *indices: int) -> np.random.Generator:
    """派生子随机数生成器"""
    return np.random.default_rng(derive_seed(seed, *indices))


def derive_int(seed: int, *indices: int) -> int:
    """派生一个64位整数种子（用于需要整数种子的接口）"""
    return int(derive_seed(seed, *indices).generate_state(1, dtype=np.uint64)[0])
