"""预定义功能系统（32个ROI，8个网络）"""
from collections import OrderedDict
from typing import Dict, List, Optional, Sequence

import numpy as np

# 处理相对导入问题
try:
    from ..schema import SystemPartition
    from ..utils.errors import InvalidParameterError
except (ImportError, ValueError):
    # 如果相对导入失败，使用绝对导入
    import sys
    from pathlib import Path
    current_file = Path(__file__).resolve()
    project_root = current_file.parent.parent
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))
    from schema import SystemPartition
    from utils.errors import InvalidParameterError


DEFAULT_SYSTEMS: "OrderedDict[str, List[str]]" = OrderedDict([
    ("DMN", ["DMN.MPFC", "DMN.PCC", "DMN.LP_L", "DMN.LP_R"]),
    ("SMN", ["SMN.Superior", "SMN.Lateral_L", "SMN.Lateral_R"]),
    ("VIS", ["VIS.Medial", "VIS.Occipital", "VIS.Lateral_L", "VIS.Lateral_R"]),
    ("SAN", ["SAN.ACC", "SAN.AInsula_L", "SAN.AInsula_R", "SAN.RPFC_L", "SAN.RPFC_R",
             "SAN.SMG_L", "SAN.SMG_R"]),
    ("DAN", ["DAN.FEF_L", "DAN.FEF_R", "DAN.IPS_L", "DAN.IPS_R"]),
    ("FPN", ["FPN.LPFC_L", "FPN.LPFC_R", "FPN.PPC_L", "FPN.PPC_R"]),
    ("LN", ["LN.IFG_L", "LN.IFG_R", "LN.pSTG_L", "LN.pSTG_R"]),
    ("CE", ["CE.Anterior", "CE.Posterior"]),
])


def default_region_labels() -> List[str]:
    """默认的32个ROI名称（按系统顺序）"""
    return [label for members in DEFAULT_SYSTEMS.values() for label in members]


def default_mapping() -> Dict[str, str]:
    """默认的 region label -> system name 映射"""
    return {label: name for name, members in DEFAULT_SYSTEMS.items() for label in members}


def default_system_partition() -> SystemPartition:
    return SystemPartition.from_mapping(default_region_labels(), default_mapping())


def resolve_system_partition(
    region_labels: Sequence[str], mapping: Optional[Dict[str, str]] = None
) -> SystemPartition:
    """
    为给定的区域名称确定功能系统划分

    未提供映射时：区域名与默认ROI一致则用默认系统；
    否则按 "系统.区域" 命名约定取点号前缀作为系统名。

    Args:
        region_labels: 区域名称
        mapping: 显式映射（可选）

    Returns:
        SystemPartition
    """
    if mapping is not None:
        return SystemPartition.from_mapping(region_labels, mapping)
    defaults = default_mapping()
    if all(label in defaults for label in region_labels):
        return SystemPartition.from_mapping(region_labels, defaults)
    if all("." in label for label in region_labels):
        return SystemPartition.from_mapping(
            region_labels, {label: label.split(".", 1)[0] for label in region_labels}
        )
    raise InvalidParameterError(
        "cannot infer functional systems; provide system_partition in the config"
    )


def partition_from_blocks(labels: np.ndarray, region_labels: Sequence[str], prefix: str = "S") -> SystemPartition:
    """由社区标签向量构造系统划分（合成数据中植入的块即为系统）"""
    labels = np.asarray(labels, dtype=int)
    names = [f"{prefix}{b}" for b in range(int(labels.max()) + 1)]
    return SystemPartition(labels, names, list(region_labels))
