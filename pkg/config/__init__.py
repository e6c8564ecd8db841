"""配置模块"""
from .config import PipelineConfig, PathsConfig, load_config, DEFAULT_DENSITIES, ENV_PREFIX

__all__ = ['PipelineConfig', 'PathsConfig', 'load_config', 'DEFAULT_DENSITIES', 'ENV_PREFIX']
