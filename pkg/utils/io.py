"""文件读写：时间序列、dFNC、社区划分、指标、元数据

所有写操作先写入目标目录下的临时文件，再用os.replace原子替换。
CSV文件第一行为 "# config_hash=<hash>" 注释行。
"""
import io
import json
import os
import tempfile
import zipfile
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

# 处理相对导入问题
try:
    from .errors import FormatError
    from ..schema import (
        CohortMetadata,
        CommunityAssignment,
        ConnectivityKind,
        ConnectivityMatrix,
        DynamicConnectivity,
        TimeSeries,
    )
except (ImportError, ValueError):
    # 如果相对导入失败，使用绝对导入
    import sys
    current_file = Path(__file__).resolve()
    project_root = current_file.parent.parent
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))
    from utils.errors import FormatError
    from schema import (
        CohortMetadata,
        CommunityAssignment,
        ConnectivityKind,
        ConnectivityMatrix,
        DynamicConnectivity,
        TimeSeries,
    )

PathLike = Union[str, Path]

HASH_PREFIX = "# config_hash="
MEASURE_COLUMNS = ["subject", "measure", "level", "target", "raw", "normalized", "raw_paper_scale"]
DENSITY_COLUMNS = ["subject", "density", "q"]


# ---------------------------------------------------------------------------
# 基础
# ---------------------------------------------------------------------------

def atomic_write_bytes(path: PathLike, data: bytes) -> None:
    """原子写入：临时文件 + os.replace"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: PathLike, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_json(obj, path: PathLike) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


def read_json(path: PathLike):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON ({e})") from e


def write_csv(frame: pd.DataFrame, path: PathLike, config_hash: Optional[str] = None) -> None:
    """
    写CSV（表头行 + 可选的配置哈希注释行）

    浮点数按repr写出，读回后逐位相同。
    """
    body = frame.to_csv(index=False, lineterminator="\n")
    header = f"{HASH_PREFIX}{config_hash}\n" if config_hash else ""
    atomic_write_text(path, header + body)


def read_csv(path: PathLike) -> Tuple[pd.DataFrame, Optional[str]]:
    """
    读CSV，跳过开头的注释行

    编码错误、行长度不一致、表头重复等问题都报FormatError。

    Returns:
        (DataFrame, 配置哈希或None)
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines(keepends=True)
    except UnicodeDecodeError as e:
        raise FormatError(f"{path}: not valid UTF-8 ({e.reason} at byte {e.start})", field="encoding") from e
    config_hash = None
    start = 0
    while start < len(lines) and lines[start].startswith("#"):
        if lines[start].startswith(HASH_PREFIX):
            config_hash = lines[start][len(HASH_PREFIX):].strip()
        start += 1
    body = "".join(lines[start:])
    if not body.strip():
        raise FormatError(f"{path}: no header row", field="header")
    try:
        header = pd.read_csv(io.StringIO(body), header=None, nrows=1, dtype=str, keep_default_na=False)
        frame = pd.read_csv(io.StringIO(body))
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise FormatError(f"{path}: malformed CSV ({e})", field="body") from e
    names = [str(x).strip() for x in header.iloc[0]]
    duplicated = sorted({n for n in names if names.count(n) > 1})
    if duplicated:
        raise FormatError(f"{path}: duplicate column(s) {', '.join(duplicated)}", field=duplicated[0])
    return frame, config_hash


def _require(frame: pd.DataFrame, columns: Iterable[str], path: PathLike) -> None:
    for col in columns:
        if col not in frame.columns:
            raise FormatError(f"{path}: missing column '{col}'", field=col)


# ---------------------------------------------------------------------------
# 时间序列
# ---------------------------------------------------------------------------

def write_timeseries(ts: TimeSeries, path: PathLike, config_hash: Optional[str] = None) -> None:
    """时间序列CSV：表头为ROI名称，每行一个采样点"""
    write_csv(pd.DataFrame(ts.values, columns=ts.region_labels), path, config_hash)


def read_timeseries(path: PathLike, sample_period: float = 2.25, subject_id: Optional[str] = None) -> TimeSeries:
    frame, _ = read_csv(path)
    for col in frame.columns:
        if not pd.api.types.is_numeric_dtype(frame[col]):
            raise FormatError(f"{path}: column '{col}' is not numeric", field=str(col))
    return TimeSeries(
        values=frame.to_numpy(dtype=float),
        region_labels=[str(c) for c in frame.columns],
        sample_period=sample_period,
        subject_id=subject_id if subject_id is not None else Path(path).stem,
    )


# ---------------------------------------------------------------------------
# dFNC
# ---------------------------------------------------------------------------

_DFC_FIELDS = ("layers", "window_width", "step", "region_labels", "subject_id", "kind")
_ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)


def write_dfc(dfc: DynamicConnectivity, path: PathLike) -> None:
    """dFNC 保存为 .npz（zip条目使用固定时间戳，同样的输入写出相同的字节）"""
    arrays = {
        "layers": dfc.stack(),
        "window_width": np.array(dfc.window_width),
        "step": np.array(dfc.step),
        "region_labels": np.array(dfc.region_labels, dtype=str),
        "subject_id": np.array(dfc.subject_id),
        "kind": np.array(dfc.layers[0].kind.value),
    }
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_STORED) as zf:
        for name, array in arrays.items():
            entry = io.BytesIO()
            np.lib.format.write_array(entry, np.ascontiguousarray(array), allow_pickle=False)
            zf.writestr(zipfile.ZipInfo(f"{name}.npy", date_time=_ZIP_EPOCH), entry.getvalue())
    atomic_write_bytes(path, buf.getvalue())


def read_dfc(path: PathLike) -> DynamicConnectivity:
    try:
        archive = np.load(path, allow_pickle=False)
    except (ValueError, zipfile.BadZipFile) as e:
        raise FormatError(f"{path}: not a readable .npz archive ({e})", field="layers") from e
    if not isinstance(archive, np.lib.npyio.NpzFile):
        raise FormatError(f"{path}: expected an .npz archive", field="layers")
    with archive as data:
        for name in _DFC_FIELDS:
            if name not in data.files:
                raise FormatError(f"{path}: missing field '{name}'", field=name)
        layers = data["layers"]
        if layers.ndim != 3 or layers.shape[1] != layers.shape[2]:
            raise FormatError(f"{path}: layers must be T x N x N", field="layers")
        try:
            kind = ConnectivityKind(str(data["kind"]))
        except ValueError as e:
            raise FormatError(f"{path}: unknown connectivity kind", field="kind") from e
        return DynamicConnectivity(
            layers=[ConnectivityMatrix(layer, kind) for layer in layers],
            window_width=int(data["window_width"]),
            step=int(data["step"]),
            region_labels=[str(x) for x in data["region_labels"]],
            subject_id=str(data["subject_id"]),
        )


# ---------------------------------------------------------------------------
# 社区划分
# ---------------------------------------------------------------------------

def assignments_frame(cas: Sequence[CommunityAssignment], region_labels: Sequence[str]) -> pd.DataFrame:
    """宽表：每行一层，列为 run + 各ROI的社区编号"""
    region_labels = [str(r) for r in region_labels]
    parts = []
    for r, ca in enumerate(cas):
        if ca.n_nodes != len(region_labels):
            raise FormatError(f"run {r} has {ca.n_nodes} regions, expected {len(region_labels)}", field="region")
        part = pd.DataFrame(ca.labels, columns=region_labels)
        part.insert(0, "run", r)
        parts.append(part)
    if not parts:
        return pd.DataFrame(columns=["run", *region_labels])
    return pd.concat(parts, ignore_index=True)


def write_assignments(
    cas: Sequence[CommunityAssignment],
    region_labels: Sequence[str],
    path: PathLike,
    config_hash: Optional[str] = None,
) -> None:
    write_csv(assignments_frame(cas, region_labels), path, config_hash)


def read_assignments(path: PathLike) -> Tuple[List[CommunityAssignment], List[str]]:
    """
    读社区划分：每行一层、每列一个ROI；可选的run列区分集成中的各次运行，
    没有run列时视为单次运行

    Returns:
        (按run排序的划分列表, ROI名称)
    """
    frame, _ = read_csv(path)
    if "run" not in frame.columns:
        frame.insert(0, "run", 0)
    regions = [str(c) for c in frame.columns if c != "run"]
    if not regions:
        raise FormatError(f"{path}: no region columns", field="region")
    for col in frame.columns:
        if not pd.api.types.is_integer_dtype(frame[col]):
            raise FormatError(f"{path}: column '{col}' must hold integer community ids", field=str(col))
    cas = []
    for _, sub in frame.groupby("run", sort=True):
        cas.append(CommunityAssignment(sub.drop(columns="run").to_numpy(dtype=int)))
    return cas, regions


# ---------------------------------------------------------------------------
# 指标
# ---------------------------------------------------------------------------

def measures_frame(measure_set) -> pd.DataFrame:
    """一个被试的MeasureSet展开为长表"""
    n = len(measure_set.keys)
    normalized = measure_set.normalized if measure_set.normalized is not None else np.full(n, np.nan)
    return pd.DataFrame({
        "subject": [measure_set.subject_id] * n,
        "measure": [k.value for k, _, _ in measure_set.keys],
        "level": [lvl.value for _, lvl, _ in measure_set.keys],
        "target": [t for _, _, t in measure_set.keys],
        "raw": measure_set.raw,
        "normalized": normalized,
        "raw_paper_scale": measure_set.raw_paper_scale,
    }, columns=MEASURE_COLUMNS)


def write_measures(frame: pd.DataFrame, csv_path: PathLike, json_path: Optional[PathLike] = None,
                   config_hash: Optional[str] = None) -> None:
    write_csv(frame, csv_path, config_hash)
    if json_path is not None:
        records = json.loads(frame.to_json(orient="records", double_precision=15))
        write_json({"config_hash": config_hash, "measures": records}, json_path)


def read_measures(path: PathLike) -> pd.DataFrame:
    frame, _ = read_csv(path)
    _require(frame, MEASURE_COLUMNS, path)
    frame["subject"] = frame["subject"].astype(str)
    frame["target"] = frame["target"].astype(str)
    return frame


def read_density_curves(path: PathLike) -> pd.DataFrame:
    frame, _ = read_csv(path)
    _require(frame, DENSITY_COLUMNS, path)
    frame["subject"] = frame["subject"].astype(str)
    return frame


# ---------------------------------------------------------------------------
# 元数据
# ---------------------------------------------------------------------------

def write_metadata(meta: CohortMetadata, path: PathLike) -> None:
    write_json(meta.to_dict(), path)


def read_metadata(path: PathLike) -> CohortMetadata:
    """读队列元数据JSON；缺字段或取值非法时报FormatError并指出字段"""
    data = read_json(path)
    if not isinstance(data, dict) or "subjects" not in data:
        raise FormatError(f"{path}: missing field 'subjects'", field="subjects")
    for i, item in enumerate(data["subjects"]):
        for name in ("subject_id", "group", "age", "sex", "fd"):
            if name not in item:
                raise FormatError(f"{path}: subject {i} missing field '{name}'", field=name)
    try:
        return CohortMetadata.from_dict(data)
    except ValueError as e:
        raise FormatError(f"{path}: {e}", field="subjects") from e


def list_subject_files(directory: PathLike, suffix: str) -> Dict[str, Path]:
    """目录下 <subject>.<suffix> 文件，按被试编号排序"""
    directory = Path(directory)
    if not directory.is_dir():
        return {}
    return {p.stem: p for p in sorted(directory.glob(f"*{suffix}")) if not p.name.startswith(".")}
