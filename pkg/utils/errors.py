"""流水线异常定义

所有异常都继承自PipelineError，同时继承对应的内置异常类型，
调用方既可以按领域捕获，也可以按ValueError/RuntimeError捕获。
"""
from typing import Optional


class PipelineError(Exception):
    """流水线异常基类"""


class InvalidParameterError(PipelineError, ValueError):
    """参数不合法（窗口宽度、sigma、密度等）"""


class DegenerateSignalError(PipelineError, ValueError):
    """信号方差为0，相关系数无定义"""

    def __init__(self, message: str, region: Optional[str] = None, window: Optional[int] = None):
        super().__init__(message)
        self.region = region
        self.window = window


class DomainError(PipelineError, ValueError):
    """数学函数定义域错误（如 |r| >= 1 的Fisher z变换）"""


class EmptyGraphError(PipelineError, ValueError):
    """图的总权重为0"""


class EmptyLayerError(PipelineError, ValueError):
    """多层网络中某一层总权重为0"""

    def __init__(self, message: str, layer: int):
        super().__init__(message)
        self.layer = layer


class ShapeMismatchError(PipelineError, ValueError):
    """输入的形状不一致"""


class UndefinedMeasureError(PipelineError, ValueError):
    """动态指标在当前输入上无定义"""


class NormalizationDegenerateError(PipelineError, ZeroDivisionError):
    """零模型均值为0，无法归一化"""

    def __init__(self, message: str, target: Optional[str] = None):
        super().__init__(message)
        self.target = target


class CollinearityError(PipelineError, ValueError):
    """设计矩阵秩亏"""


class SampleSizeError(PipelineError, ValueError):
    """组内样本量不足"""


class InfeasibleSpecError(PipelineError, ValueError):
    """合成数据的相关结构不可实现"""


class FormatError(PipelineError, ValueError):
    """中间文件格式错误"""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field
