"""系统配置文件"""
import hashlib
import json
import os
from pathlib import Path
from typing import Dict, List, Optional, Union

from pydantic import BaseModel, Field, field_validator, model_validator

try:
    from dotenv import load_dotenv
except ImportError:
    # python-dotenv未安装时，只读取进程环境变量
    load_dotenv = None

ENV_PREFIX = "MLDYN_"

DEFAULT_DENSITIES: List[float] = [round(0.04 + 0.01 * i, 2) for i in range(17)]

DEFAULT_CORRECTION: Dict[str, str] = {
    "static_modularity": "bonferroni",
    "recruitment": "fdr",
    "integration_within": "fdr",
    "integration_between": "fdr",
    "flexibility": "fdr",
    "allegiance_mean": "fdr",
}


class PathsConfig(BaseModel):
    """输入输出路径"""
    input_dir: Optional[str] = None
    out_dir: str = "./results"


class PipelineConfig(BaseModel):
    """流水线配置类"""

    # 滑动窗口
    window_width: int = 50  # 窗口宽度（采样点，TR）
    step: int = 1  # 步长（采样点）
    taper_sigma: float = 3.0  # 高斯核标准差（采样点）
    sample_period: float = 2.25  # TR（秒），时间序列文件中不包含

    # 多层模块度
    gamma: float = 1.0
    omega: float = 1.0
    restarts: int = 100
    grid_search: bool = False
    gamma_grid: List[float] = Field(default_factory=lambda: [0.8, 0.9, 1.0, 1.1, 1.2])
    omega_grid: List[float] = Field(default_factory=lambda: [0.5, 0.75, 1.0])
    detection_mode: str = "subject"  # subject: 逐被试；group: 组拼接

    # 动态指标归一化
    n_perm: int = 1000
    null_mode: str = "assignment"  # assignment: 置换划分；redetect: 置换连接后重新检测

    # 静态模块度
    densities: List[float] = Field(default_factory=lambda: list(DEFAULT_DENSITIES))
    static_restarts: int = 20
    static_density_subset: Optional[List[float]] = None  # None表示全部密度

    # 统计
    alpha: float = 0.05
    fdr_q: float = 0.05
    equal_var: bool = True
    posthoc_gate: bool = True
    correction: Dict[str, str] = Field(default_factory=lambda: dict(DEFAULT_CORRECTION))

    # 功能系统（region label -> system name）；None表示默认32 ROI / 8系统
    system_partition: Optional[Dict[str, str]] = None

    seed: int = 0
    paths: PathsConfig = Field(default_factory=PathsConfig)

    model_config = {"extra": "forbid"}

    @field_validator("window_width")
    @classmethod
    def _check_width(cls, v: int) -> int:
        if v < 2:
            raise ValueError("window_width must be >= 2")
        return v

    @field_validator("step", "restarts", "n_perm", "static_restarts")
    @classmethod
    def _check_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @field_validator("detection_mode")
    @classmethod
    def _check_mode(cls, v: str) -> str:
        if v not in ("subject", "group"):
            raise ValueError("detection_mode must be 'subject' or 'group'")
        return v

    @field_validator("null_mode")
    @classmethod
    def _check_null_mode(cls, v: str) -> str:
        if v not in ("assignment", "redetect"):
            raise ValueError("null_mode must be 'assignment' or 'redetect'")
        return v

    @field_validator("densities")
    @classmethod
    def _check_densities(cls, v: List[float]) -> List[float]:
        if not v or any(d <= 0 or d > 1 for d in v):
            raise ValueError("densities must lie in (0, 1]")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("densities must be strictly increasing")
        return v

    @model_validator(mode="after")
    def _fill_correction(self) -> "PipelineConfig":
        merged = dict(DEFAULT_CORRECTION)
        merged.update(self.correction)
        for family, method in merged.items():
            if method not in ("fdr", "bonferroni"):
                raise ValueError(f"unknown correction '{method}' for family '{family}'")
        self.correction = merged
        return self

    # ------------------------------------------------------------------
    # 序列化
    # ------------------------------------------------------------------

    def to_json(self) -> str:
        """序列化为JSON文本（键有序，便于比对）"""
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "PipelineConfig":
        return cls.model_validate_json(text)

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    def config_hash(self) -> str:
        """
        计算配置哈希（不含路径）

        Returns:
            SHA-256十六进制字符串
        """
        payload = self.model_dump(mode="json", exclude={"paths"})
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _env_overrides(environ: Dict[str, str]) -> Dict[str, object]:
    """
    从环境变量中收集 MLDYN_ 前缀的覆盖项

    值按JSON解析（如 MLDYN_DENSITIES=[0.1,0.2]），解析失败时按字符串处理。
    """
    overrides: Dict[str, object] = {}
    fields = set(PipelineConfig.model_fields)
    for key, raw in environ.items():
        if not key.startswith(ENV_PREFIX):
            continue
        name = key[len(ENV_PREFIX):].lower()
        if name not in fields:
            continue
        try:
            overrides[name] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[name] = raw
    return overrides


def load_config(
    path: Optional[Union[str, Path]] = None,
    environ: Optional[Dict[str, str]] = None,
    use_dotenv: bool = True,
    **overrides,
) -> PipelineConfig:
    """
    加载配置：默认值 < 配置文件 < 环境变量 < 显式参数

    Args:
        path: JSON配置文件路径（可选）
        environ: 环境变量字典（默认os.environ）
        use_dotenv: 是否读取当前目录的 .env 文件
        **overrides: 显式覆盖项（如命令行参数）

    Returns:
        PipelineConfig
    """
    if use_dotenv and load_dotenv is not None and environ is None:
        load_dotenv(override=False)
    data: Dict[str, object] = {}
    if path is not None:
        data.update(json.loads(Path(path).read_text(encoding="utf-8")))
    data.update(_env_overrides(dict(os.environ) if environ is None else environ))
    data.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig.model_validate(data)
