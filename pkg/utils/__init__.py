"""工具函数模块"""
from .logger import setup_logging, get_logger, LOG_FORMAT
from .seeding import derive_seed, derive_rng, derive_int, make_rng

__all__ = [
    'setup_logging', 'get_logger', 'LOG_FORMAT',
    'derive_seed', 'derive_rng', 'derive_int', 'make_rng',
]
