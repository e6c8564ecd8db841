"""命令行入口：synth / pipeline / stage

退出码：0 成功，1 用法错误，2 输入错误，3 部分被试失败
"""
import argparse
import json
import logging
import platform
import sys
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from pydantic import ValidationError

# 处理相对导入问题
try:
    from .stages import STAGES, StageContext, StageReport, load_metadata, run_stage
    from ..config.config import ENV_PREFIX, PipelineConfig, load_config
    from ..synth import cohort_spec_from_dict, default_cohort_spec, generate_cohort
    from ..utils import io
    from ..utils.errors import FormatError, InfeasibleSpecError, PipelineError
    from ..utils.logger import get_logger, setup_logging
except (ImportError, ValueError):
    # 如果相对导入失败，使用绝对导入
    current_file = Path(__file__).resolve()
    project_root = current_file.parent.parent
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))
    from cli.stages import STAGES, StageContext, StageReport, load_metadata, run_stage
    from config.config import ENV_PREFIX, PipelineConfig, load_config
    from synth import cohort_spec_from_dict, default_cohort_spec, generate_cohort
    from utils import io
    from utils.errors import FormatError, InfeasibleSpecError, PipelineError
    from utils.logger import get_logger, setup_logging

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_PARTIAL = 3

MANIFEST_FILE = "manifest.json"

_VERSIONED_PACKAGES = ("numpy", "scipy", "pandas", "scikit-learn", "pydantic")


class UsageError(Exception):
    """命令行用法错误"""


class _ArgumentParser(argparse.ArgumentParser):
    """用法错误以退出码1结束"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, default=None, help='JSON配置文件路径')
    common.add_argument('--seed', type=int, default=None, help='主随机种子（覆盖配置）')
    common.add_argument('--jobs', type=int, default=1, help='并行处理的被试数（默认1）')
    common.add_argument('--out', type=str, default=None, help='输出目录（默认配置中的paths.out_dir）')
    common.add_argument('-v', '--verbose', action='store_true', help='输出DEBUG日志')

    parser = _ArgumentParser(
        description='脑功能网络多层动态分析流水线',
        epilog=f'环境变量 {ENV_PREFIX}<FIELD> 可覆盖配置中的同名字段（如 {ENV_PREFIX}GAMMA=1.2）',
    )
    sub = parser.add_subparsers(dest='command', required=True)

    synth = sub.add_parser('synth', parents=[common], help='生成合成队列')
    synth.add_argument('--cohort', type=str, default=None, help='队列规格JSON（默认15/6/9无效应队列）')

    pipeline = sub.add_parser('pipeline', parents=[common], help='运行完整流水线')
    pipeline.add_argument('--input', type=str, default=None, help='时间序列CSV与metadata.json所在目录')

    stage = sub.add_parser('stage', parents=[common], help='只运行一个阶段')
    stage.add_argument('--stage', type=str, required=True, choices=STAGES, help='阶段名称')
    stage.add_argument('--input', type=str, default=None,
                       help='阶段输入目录（dfc/static-mod为时间序列目录，其余为上一阶段的输出目录）')
    return parser


def package_versions() -> Dict[str, str]:
    versions = {"python": platform.python_version()}
    for name in _VERSIONED_PACKAGES:
        try:
            versions[name] = version(name)
        except PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def build_manifest(
    command: str,
    config: PipelineConfig,
    reports: Sequence[StageReport],
    n_subjects: int,
) -> Dict[str, object]:
    """运行清单：配置哈希、种子、版本、输出文件、失败被试"""
    failed: Dict[str, str] = {}
    outputs: List[str] = []
    extras: Dict[str, object] = {}
    for report in reports:
        for sid, reason in report.failed.items():
            failed.setdefault(sid, reason)
        outputs.extend(report.outputs)
        extras.update(report.extras)
    return {
        "command": command,
        "stages": [r.stage for r in reports],
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "versions": package_versions(),
        "n_subjects": n_subjects,
        "failed_subjects": dict(sorted(failed.items())),
        "outputs": sorted(set(outputs) | {MANIFEST_FILE}),
        **extras,
    }


def _finish(manifest: Dict[str, object], out_dir: Path) -> int:
    io.write_json(manifest, out_dir / MANIFEST_FILE)
    print(json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False))
    return EXIT_PARTIAL if manifest["failed_subjects"] else EXIT_OK


def _resolve_dir(value: Optional[str], fallback: Optional[str], what: str) -> Path:
    path = value or fallback
    if not path:
        raise UsageError(f"no {what} directory given")
    return Path(path)


def cmd_synth(config: PipelineConfig, out_dir: Path, cohort_path: Optional[str] = None) -> int:
    """生成合成队列：每个被试一个CSV + metadata.json"""
    if cohort_path is not None:
        spec = cohort_spec_from_dict(io.read_json(cohort_path))
    else:
        spec = default_cohort_spec()
    series, meta = generate_cohort(spec, config.seed)
    config_hash = config.config_hash()
    report = StageReport("synth")
    for ts in series:
        rel = f"{ts.subject_id}.csv"
        io.write_timeseries(ts, out_dir / rel, config_hash)
        report.outputs.append(rel)
    io.write_metadata(meta, out_dir / "metadata.json")
    report.outputs.append("metadata.json")
    return _finish(build_manifest("synth", config, [report], len(meta)), out_dir)


def _context(config: PipelineConfig, input_dir: Path, out_dir: Path, jobs: int) -> StageContext:
    meta = load_metadata(input_dir)
    return StageContext(config=config, input_dir=input_dir, out_dir=out_dir, meta=meta, jobs=jobs)


def cmd_pipeline(config: PipelineConfig, input_dir: Path, out_dir: Path, jobs: int = 1) -> int:
    """
    运行完整流水线

    dfc与static-mod读取时间序列目录，其余阶段读取输出目录中的中间结果。
    """
    ctx = _context(config, input_dir, out_dir, jobs)
    if not io.list_subject_files(input_dir, ".csv"):
        raise FileNotFoundError(f"no time series CSV files in {input_dir}")
    reports = []
    for name in STAGES:
        stage_input = input_dir if name in ("dfc", "static-mod") else out_dir
        reports.append(run_stage(name, StageContext(config, stage_input, out_dir, ctx.meta, jobs)))
    return _finish(build_manifest("pipeline", config, reports, len(ctx.meta)), out_dir)


def cmd_stage(name: str, config: PipelineConfig, input_dir: Path, out_dir: Path, jobs: int = 1) -> int:
    """只运行一个阶段"""
    ctx = _context(config, input_dir, out_dir, jobs)
    report = run_stage(name, ctx)
    return _finish(build_manifest(f"stage:{name}", config, [report], len(ctx.meta)), out_dir)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(logging.DEBUG if args.verbose else logging.INFO)

    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        config = load_config(args.config, seed=args.seed)
    except FileNotFoundError as e:
        logger.error("config file not found: %s", e)
        return EXIT_INPUT
    except (ValidationError, json.JSONDecodeError) as e:
        logger.error("invalid configuration: %s", e)
        return EXIT_INPUT

    try:
        out_dir = _resolve_dir(args.out, config.paths.out_dir, "output")
        if args.command == 'synth':
            return cmd_synth(config, out_dir, args.cohort)
        input_dir = _resolve_dir(args.input, config.paths.input_dir, "input")
        if args.command == 'pipeline':
            return cmd_pipeline(config, input_dir, out_dir, args.jobs)
        return cmd_stage(args.stage, config, input_dir, out_dir, args.jobs)
    except UsageError as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except (FileNotFoundError, FormatError, InfeasibleSpecError) as e:
        logger.error("input error: %s", e)
        return EXIT_INPUT
    except PipelineError as e:
        logger.error("pipeline error: %s", e)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
