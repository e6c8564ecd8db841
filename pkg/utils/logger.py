"""日志工具"""
import logging
from typing import Optional

LOG_FORMAT = ":%(asctime)s:%(levelname)s:%(name)s:%(message)s"

_configured = False


def setup_logging(level: int = logging.INFO, fmt: Optional[str] = None) -> None:
    """
    配置根日志器（只生效一次）

    Args:
        level: 日志级别
        fmt: 日志格式（默认LOG_FORMAT）
    """
    global _configured
    if _configured:
        logging.getLogger().setLevel(level)
        return
    logging.basicConfig(format=fmt or LOG_FORMAT, level=level)
    _configured = True


def get_logger(name: str) -> logging.Logger:
    """获取模块日志器"""
    return logging.getLogger(name)
