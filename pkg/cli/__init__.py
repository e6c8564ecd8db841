"""命令行模块"""
from .app import main, build_parser, cmd_synth, cmd_pipeline, cmd_stage, EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_PARTIAL
from .stages import STAGES, StageContext, StageReport, run_stage

__all__ = [
    'main', 'build_parser', 'cmd_synth', 'cmd_pipeline', 'cmd_stage',
    'EXIT_OK', 'EXIT_USAGE', 'EXIT_INPUT', 'EXIT_PARTIAL',
    'STAGES', 'StageContext', 'StageReport', 'run_stage',
]
