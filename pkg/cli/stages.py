"""流水线各阶段

每个阶段从输入目录读取上一阶段的中间结果，写出本阶段结果，
因此串联全部阶段与一次性运行整个流水线得到相同的文件。

输出目录结构：
    metadata.json             队列元数据
    dfc/<subject>.npz         动态功能连接
    density_curve.csv         静态模块度-边密度曲线
    assignments/<subject>.csv 多层社区划分集成（每行一层，列为run与各ROI）
    grid_search.csv           γ/ω网格稳定性（启用网格搜索时）
    selected_params.json      实际使用的γ/ω
    measures.csv / .json      动态指标（原始值与归一化值）
    stats.csv                 组水平检验
    boxplot_quantiles.csv     箱线图分位数
"""
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

# 处理相对导入问题
try:
    from ..config.config import PipelineConfig
    from ..connectivity import dfc_estimate, make_taper, static_fc
    from ..measures import resolve_system_partition, subject_measures
    from ..multilayer import (
        build_supra, concatenate_group, grid_stability, run_ensemble, select_from_grid, split_assignment,
    )
    from ..schema import CohortMetadata, DensityCurve, MeasureKind, ModularityParams
    from ..static_mod import modularity_density_sweep
    from ..stats import QUANTILE_COLUMNS, STAT_COLUMNS, family_analysis, quantile_table, static_outcomes
    from ..utils import io
    from ..utils.errors import PipelineError
    from ..utils.logger import get_logger
    from ..utils.seeding import derive_int
except (ImportError, ValueError):
    # 如果相对导入失败，使用绝对导入
    import sys
    current_file = Path(__file__).resolve()
    project_root = current_file.parent.parent
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))
    from config.config import PipelineConfig
    from connectivity import dfc_estimate, make_taper, static_fc
    from measures import resolve_system_partition, subject_measures
    from multilayer import (
        build_supra, concatenate_group, grid_stability, run_ensemble, select_from_grid, split_assignment,
    )
    from schema import CohortMetadata, DensityCurve, MeasureKind, ModularityParams
    from static_mod import modularity_density_sweep
    from stats import QUANTILE_COLUMNS, STAT_COLUMNS, family_analysis, quantile_table, static_outcomes
    from utils import io
    from utils.errors import PipelineError
    from utils.logger import get_logger
    from utils.seeding import derive_int

logger = get_logger(__name__)

STAGES = ("dfc", "static-mod", "detect", "measures", "stats")

METADATA_FILE = "metadata.json"
DFC_DIR = "dfc"
ASSIGNMENT_DIR = "assignments"
DENSITY_FILE = "density_curve.csv"
GRID_FILE = "grid_search.csv"
PARAMS_FILE = "selected_params.json"
MEASURES_CSV = "measures.csv"
MEASURES_JSON = "measures.json"
STATS_FILE = "stats.csv"
BOXPLOT_FILE = "boxplot_quantiles.csv"

# 派生种子时的用途编号
SEED_DETECT, SEED_NULL, SEED_STATIC, SEED_GROUP, SEED_GRID = range(5)

# 单个被试失败时只中止该被试的异常
SUBJECT_ERRORS = (PipelineError, OSError)


@dataclass
class StageReport:
    """阶段运行结果"""
    stage: str
    outputs: List[str] = field(default_factory=list)  # 相对输出目录的路径
    failed: Dict[str, str] = field(default_factory=dict)  # subject -> 错误信息
    extras: Dict[str, object] = field(default_factory=dict)


@dataclass
class StageContext:
    """阶段运行所需的公共参数"""
    config: PipelineConfig
    input_dir: Path
    out_dir: Path
    meta: CohortMetadata
    jobs: int = 1

    @property
    def config_hash(self) -> str:
        return self.config.config_hash()


def load_metadata(input_dir: Path) -> CohortMetadata:
    """读取输入目录中的队列元数据（缺失时报FileNotFoundError）"""
    path = Path(input_dir) / METADATA_FILE
    if not path.exists():
        raise FileNotFoundError(f"no {METADATA_FILE} in {input_dir}")
    meta = io.read_metadata(path)
    if len(meta) == 0:
        raise FileNotFoundError(f"{path} lists no subjects")
    return meta


def _parallel_map(func: Callable, items: Sequence, jobs: int, desc: str) -> List:
    """按输入顺序收集结果；jobs > 1 时使用进程池"""
    if jobs > 1 and len(items) > 1:
        with Pool(processes=min(jobs, len(items))) as pool:
            return list(tqdm(pool.imap(func, items), total=len(items), desc=desc, disable=None))
    return [func(item) for item in tqdm(items, desc=desc, disable=None)]


def _subject_inputs(
    ctx: StageContext, files: Dict[str, Path], report: StageReport
) -> List[Tuple[int, str, Path]]:
    """按元数据顺序列出(被试下标, 编号, 输入文件)；缺输入的被试记为失败"""
    items = []
    for idx, sid in enumerate(ctx.meta.subject_ids):
        if sid in files:
            items.append((idx, sid, files[sid]))
        else:
            report.failed[sid] = f"{report.stage}: missing input"
            logger.warning("subject %s: no input for stage %s", sid, report.stage)
    return items


def _record_failure(report: StageReport, sid: str, error: str) -> None:
    report.failed[sid] = f"{report.stage}: {error}"
    logger.warning("subject %s aborted in stage %s: %s", sid, report.stage, error)


def _copy_metadata(ctx: StageContext, report: StageReport) -> None:
    io.write_metadata(ctx.meta, ctx.out_dir / METADATA_FILE)
    report.outputs.append(METADATA_FILE)


# ---------------------------------------------------------------------------
# dfc
# ---------------------------------------------------------------------------

def _dfc_job(args):
    sid, path, config = args
    try:
        ts = io.read_timeseries(path, config.sample_period, sid)
        taper = make_taper(config.window_width, config.taper_sigma)
        return sid, dfc_estimate(ts, taper, config.step), None
    except SUBJECT_ERRORS as e:
        return sid, None, str(e)


def stage_dfc(ctx: StageContext) -> StageReport:
    """时间序列CSV -> dFNC（.npz）"""
    report = StageReport("dfc")
    items = _subject_inputs(ctx, io.list_subject_files(ctx.input_dir, ".csv"), report)
    jobs = [(sid, path, ctx.config) for _, sid, path in items]
    for sid, dfc, error in _parallel_map(_dfc_job, jobs, ctx.jobs, "dfc"):
        if error is not None:
            _record_failure(report, sid, error)
            continue
        rel = f"{DFC_DIR}/{sid}.npz"
        io.write_dfc(dfc, ctx.out_dir / rel)
        report.outputs.append(rel)
    _copy_metadata(ctx, report)
    return report


# ---------------------------------------------------------------------------
# static-mod
# ---------------------------------------------------------------------------

def _static_job(args):
    idx, sid, path, config = args
    try:
        ts = io.read_timeseries(path, config.sample_period, sid)
        curve = modularity_density_sweep(
            static_fc(ts),
            config.densities,
            gamma=config.gamma,
            rng_seed=derive_int(config.seed, idx, SEED_STATIC),
            restarts=config.static_restarts,
        )
        return sid, curve, None
    except SUBJECT_ERRORS as e:
        return sid, None, str(e)


def stage_static(ctx: StageContext) -> StageReport:
    """时间序列CSV -> 静态模块度-边密度曲线"""
    report = StageReport("static-mod")
    items = _subject_inputs(ctx, io.list_subject_files(ctx.input_dir, ".csv"), report)
    jobs = [(idx, sid, path, ctx.config) for idx, sid, path in items]
    frames = []
    for sid, curve, error in _parallel_map(_static_job, jobs, ctx.jobs, "static modularity"):
        if error is not None:
            _record_failure(report, sid, error)
            continue
        frames.append(pd.DataFrame({"subject": sid, "density": curve.densities, "q": curve.q_values}))
    frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=io.DENSITY_COLUMNS)
    io.write_csv(frame, ctx.out_dir / DENSITY_FILE, ctx.config_hash)
    report.outputs.append(DENSITY_FILE)
    _copy_metadata(ctx, report)
    return report


# ---------------------------------------------------------------------------
# detect
# ---------------------------------------------------------------------------

def _selected_params(ctx: StageContext, dfcs: Dict[str, Path], report: StageReport) -> Tuple[float, float]:
    """确定γ/ω：网格搜索时在元数据顺序的第一个可用被试上选择"""
    config = ctx.config
    if not config.grid_search or not dfcs:
        return config.gamma, config.omega
    first = next(sid for sid in ctx.meta.subject_ids if sid in dfcs)
    table = grid_stability(io.read_dfc(dfcs[first]), config.gamma_grid, config.omega_grid,
                           config.restarts, derive_int(config.seed, 0, SEED_GRID))
    best = select_from_grid(table)
    io.write_csv(pd.DataFrame(table), ctx.out_dir / GRID_FILE, ctx.config_hash)
    report.outputs.append(GRID_FILE)
    logger.info("grid search on %s selected gamma=%.3f omega=%.3f", first, best["gamma"], best["omega"])
    return best["gamma"], best["omega"]


def _detect_job(args):
    idx, sid, path, config, gamma, omega = args
    try:
        ml = build_supra(io.read_dfc(path), gamma=gamma, omega=omega)
        params = ModularityParams(gamma, omega, config.restarts, derive_int(config.seed, idx, SEED_DETECT))
        return sid, run_ensemble(ml, params), None
    except SUBJECT_ERRORS as e:
        return sid, None, str(e)


def stage_detect(ctx: StageContext) -> StageReport:
    """dFNC -> 多层社区划分集成"""
    report = StageReport("detect")
    files = io.list_subject_files(ctx.input_dir / DFC_DIR, ".npz")
    items = _subject_inputs(ctx, files, report)
    gamma, omega = _selected_params(ctx, files, report)
    report.extras["selected_params"] = {"gamma": gamma, "omega": omega}
    io.write_json(report.extras["selected_params"], ctx.out_dir / PARAMS_FILE)
    report.outputs.append(PARAMS_FILE)

    if ctx.config.detection_mode == "group":
        results = _detect_group(ctx, items, gamma, omega, report)
    else:
        jobs = [(idx, sid, path, ctx.config, gamma, omega) for idx, sid, path in items]
        results = _parallel_map(_detect_job, jobs, ctx.jobs, "detect")

    regions = {}
    for sid, cas, error in results:
        if error is not None:
            _record_failure(report, sid, error)
            continue
        if sid not in regions:
            regions[sid] = io.read_dfc(files[sid]).region_labels
        rel = f"{ASSIGNMENT_DIR}/{sid}.csv"
        io.write_assignments(cas, regions[sid], ctx.out_dir / rel, ctx.config_hash)
        report.outputs.append(rel)
    _copy_metadata(ctx, report)
    return report


def _detect_group(ctx: StageContext, items, gamma: float, omega: float, report: StageReport):
    """组拼接模式：所有被试的层按元数据顺序拼接后一起检测"""
    dfcs, sids = [], []
    for _, sid, path in items:
        try:
            dfcs.append(io.read_dfc(path))
            sids.append(sid)
        except SUBJECT_ERRORS as e:
            _record_failure(report, sid, str(e))
    if not dfcs:
        return []
    ml, counts = concatenate_group(dfcs, gamma=gamma, omega=omega)
    params = ModularityParams(gamma, omega, ctx.config.restarts, derive_int(ctx.config.seed, 0, SEED_GROUP))
    runs = run_ensemble(ml, params)
    per_subject: List[List] = [[] for _ in sids]
    for ca in runs:
        for i, part in enumerate(split_assignment(ca, counts)):
            per_subject[i].append(part)
    return [(sid, cas, None) for sid, cas in zip(sids, per_subject)]


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

def _measures_job(args):
    idx, sid, path, dfc_path, config, gamma, omega = args
    try:
        cas, regions = io.read_assignments(path)
        systems = resolve_system_partition(regions, config.system_partition)
        ml = None
        if config.null_mode == "redetect":
            ml = build_supra(io.read_dfc(dfc_path), gamma=gamma, omega=omega)
        measures = subject_measures(
            cas,
            systems,
            n_perm=config.n_perm,
            seed=derive_int(config.seed, idx, SEED_NULL),
            null_mode=config.null_mode,
            ml=ml,
            on_degenerate="nan",
            subject_id=sid,
        )
        return sid, io.measures_frame(measures), None
    except SUBJECT_ERRORS as e:
        return sid, None, str(e)


def stage_measures(ctx: StageContext) -> StageReport:
    """社区划分集成 -> 动态指标（集成平均 + 置换归一化）"""
    report = StageReport("measures")
    files = io.list_subject_files(ctx.input_dir / ASSIGNMENT_DIR, ".csv")
    items = _subject_inputs(ctx, files, report)
    params_path = ctx.input_dir / PARAMS_FILE
    params = io.read_json(params_path) if params_path.exists() else {}
    gamma = float(params.get("gamma", ctx.config.gamma))
    omega = float(params.get("omega", ctx.config.omega))
    jobs = [
        (idx, sid, path, ctx.input_dir / DFC_DIR / f"{sid}.npz", ctx.config, gamma, omega)
        for idx, sid, path in items
    ]
    frames = []
    for sid, frame, error in _parallel_map(_measures_job, jobs, ctx.jobs, "measures"):
        if error is not None:
            _record_failure(report, sid, error)
            continue
        frames.append(frame)
    frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=io.MEASURE_COLUMNS)
    io.write_measures(frame, ctx.out_dir / MEASURES_CSV, ctx.out_dir / MEASURES_JSON, ctx.config_hash)
    report.outputs += [MEASURES_CSV, MEASURES_JSON]
    _copy_metadata(ctx, report)
    return report


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------

def measure_outcomes_from_frame(
    frame: pd.DataFrame, kind: MeasureKind, subject_ids: Sequence[str], column: str = "normalized"
) -> Dict[str, np.ndarray]:
    """
    从指标长表中取出某类指标

    Returns:
        {"level:target": 按subject_ids顺序排列的值}
    """
    sub = frame[frame["measure"] == kind.value]
    if sub.empty:
        return {}
    keys = (sub["level"] + ":" + sub["target"]).to_numpy()
    table = pd.DataFrame({"key": keys, "subject": sub["subject"].to_numpy(),
                          "value": sub[column].to_numpy(dtype=float)})
    wide = table.pivot(index="key", columns="subject", values="value")
    order = list(dict.fromkeys(keys))
    return {key: wide.loc[key, list(subject_ids)].to_numpy(dtype=float) for key in order}


def density_curves_from_frame(frame: pd.DataFrame, subject_ids: Sequence[str]) -> List[DensityCurve]:
    curves = []
    for sid in subject_ids:
        sub = frame[frame["subject"] == sid].sort_values("density")
        curves.append(DensityCurve(sub["density"].to_numpy(), sub["q"].to_numpy()))
    return curves


def _present(meta: CohortMetadata, subjects) -> CohortMetadata:
    present = set(subjects)
    return meta.subset([sid for sid in meta.subject_ids if sid in present])


def stage_stats(ctx: StageContext) -> StageReport:
    """动态指标与静态模块度 -> 组水平检验和箱线图数据"""
    report = StageReport("stats")
    config = ctx.config
    settings = dict(alpha=config.alpha, fdr_q=config.fdr_q, equal_var=config.equal_var,
                    gate=config.posthoc_gate)
    stats_frames, box_frames = [], []

    measures_path = ctx.input_dir / MEASURES_CSV
    if measures_path.exists():
        frame = io.read_measures(measures_path)
        meta = _present(ctx.meta, frame["subject"].unique())
        for kind in MeasureKind:
            outcomes = measure_outcomes_from_frame(frame, kind, meta.subject_ids)
            if not outcomes or len(meta) == 0:
                continue
            stats_frames.append(family_analysis(kind.value, outcomes, meta,
                                                method=config.correction[kind.value], **settings))
            box_frames.append(quantile_table(kind.value, outcomes, meta))
    else:
        logger.warning("no %s in %s; dynamic measures not tested", MEASURES_CSV, ctx.input_dir)

    density_path = ctx.input_dir / DENSITY_FILE
    if density_path.exists():
        frame = io.read_density_curves(density_path)
        meta = _present(ctx.meta, frame["subject"].unique())
        if len(meta):
            outcomes = static_outcomes(density_curves_from_frame(frame, meta.subject_ids),
                                       config.static_density_subset)
            stats_frames.append(family_analysis("static_modularity", outcomes, meta,
                                                method=config.correction["static_modularity"],
                                                **settings))
            box_frames.append(quantile_table("static_modularity", outcomes, meta))

    stats = [f for f in stats_frames if not f.empty]
    boxes = [f for f in box_frames if not f.empty]
    stats_frame = pd.concat(stats, ignore_index=True) if stats else pd.DataFrame(columns=STAT_COLUMNS)
    box_frame = pd.concat(boxes, ignore_index=True) if boxes else pd.DataFrame(columns=QUANTILE_COLUMNS)
    io.write_csv(stats_frame, ctx.out_dir / STATS_FILE, ctx.config_hash)
    io.write_csv(box_frame, ctx.out_dir / BOXPLOT_FILE, ctx.config_hash)
    report.outputs += [STATS_FILE, BOXPLOT_FILE]
    _copy_metadata(ctx, report)
    return report


STAGE_FUNCTIONS: Dict[str, Callable[[StageContext], StageReport]] = {
    "dfc": stage_dfc,
    "static-mod": stage_static,
    "detect": stage_detect,
    "measures": stage_measures,
    "stats": stage_stats,
}


def run_stage(name: str, ctx: StageContext) -> StageReport:
    """运行单个阶段"""
    logger.info("stage %s: start (%d subjects)", name, len(ctx.meta))
    report = STAGE_FUNCTIONS[name](ctx)
    logger.info("stage %s: done, %d outputs, %d failed subjects",
                name, len(report.outputs), len(report.failed))
    return report
