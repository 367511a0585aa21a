"""Dataset loading, validation, standardization, stratified folds and OpenML fetching."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import re
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

OPENML_API = "https://www.openml.org/api/v1/json"
CACHE_ENV = "GENHULL_CACHE"


class DataError(ValueError):
    """Raised for malformed or invalid tabular input."""


@dataclass
class Dataset:
    id: str
    X: np.ndarray
    y: np.ndarray
    feature_names: list[str]
    class_labels: list
    encoded: bool = False

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def c(self) -> int:
        return len(self.class_labels)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return replace(self, X=self.X[idx], y=self.y[idx])


@dataclass(frozen=True)
class FoldSplit:
    fold_index: int
    train_idx: np.ndarray
    test_idx: np.ndarray


@dataclass(frozen=True)
class ScalerStats:
    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray = field(default=None)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.mean.shape[0]:
            raise DataError(
                f"scaler was fit on {self.mean.shape[0]} features, got matrix of shape {X.shape}"
            )
        return (X - self.mean) / self.std

    def inverse_transform(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z, dtype=float) * self.std + self.mean


# --------------------------------------------------------------------------- loading

def _parse_float(cell: str, line: int, col: int, name: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise DataError(
            f"non-numeric value {cell!r} in feature column {name!r} (line {line}, column {col})"
        ) from None


def _resolve_target(names: list[str], target_column) -> int:
    if isinstance(target_column, int) or (isinstance(target_column, str) and target_column.lstrip("-").isdigit()
                                          and target_column not in names):
        idx = int(target_column)
        if idx < 0:
            idx += len(names)
        if not 0 <= idx < len(names):
            raise DataError(f"target column index {target_column} out of range for {len(names)} columns")
        return idx
    if target_column not in names:
        raise DataError(f"target column {target_column!r} not found; columns are {names}")
    return names.index(target_column)


def _build(dataset_id: str, names: list[str], rows: list[list[str]], line_numbers: list[int],
           target_column) -> Dataset:
    t = _resolve_target(names, target_column)
    feat_cols = [j for j in range(len(names)) if j != t]
    if not feat_cols:
        raise DataError("table has no feature columns besides the target")
    X = np.empty((len(rows), len(feat_cols)))
    labels = []
    for i, (row, line) in enumerate(zip(rows, line_numbers)):
        if len(row) != len(names):
            raise DataError(f"line {line}: expected {len(names)} fields, found {len(row)}")
        for k, j in enumerate(feat_cols):
            X[i, k] = _parse_float(row[j].strip(), line, j + 1, names[j])
        labels.append(row[t].strip())
    class_labels = list(dict.fromkeys(labels))
    return Dataset(
        id=dataset_id,
        X=X,
        y=np.asarray(labels, dtype=object),
        feature_names=[names[j] for j in feat_cols],
        class_labels=class_labels,
    )


def _read_source(source) -> tuple[str, str]:
    if isinstance(source, (bytes, bytearray)):
        return source.decode("utf-8"), "stream"
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return data, getattr(source, "name", "stream")
    path = Path(source)
    return path.read_text(encoding="utf-8"), path.stem


def _load_csv(text: str, dataset_id: str, target_column) -> Dataset:
    reader = csv.reader(io.StringIO(text))
    rows, lines = [], []
    names = None
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        if names is None:
            names = [c.strip() for c in row]
            continue
        rows.append(row)
        lines.append(reader.line_num)
    if names is None:
        raise DataError("empty CSV input")
    return _build(dataset_id, names, rows, lines, target_column)


_ATTR_RE = re.compile(r"@attribute\s+('(?:[^']|\\')*'|\"[^\"]*\"|\S+)\s+(.*)$", re.IGNORECASE)


def _unquote(s: str) -> str:
    s = s.strip()
    if len(s) >= 2 and s[0] == s[-1] and s[0] in "'\"":
        return s[1:-1]
    return s


def _load_arff(text: str, dataset_id: str, target_column) -> Dataset:
    names, kinds = [], []
    rows, lines = [], []
    in_data = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if in_data:
            if line.startswith("{"):
                raise DataError(f"line {lineno}: sparse ARFF rows are not supported")
            row = next(csv.reader([line], quotechar="'", skipinitialspace=True))
            rows.append([_unquote(c) for c in row])
            lines.append(lineno)
            continue
        low = line.lower()
        if low.startswith("@relation"):
            continue
        if low.startswith("@attribute"):
            m = _ATTR_RE.match(line)
            if not m:
                raise DataError(f"line {lineno}: malformed @attribute declaration")
            names.append(_unquote(m.group(1)))
            spec = m.group(2).strip()
            kinds.append("nominal" if spec.startswith("{") else spec.split()[0].lower())
            continue
        if low.startswith("@data"):
            in_data = True
            continue
        raise DataError(f"line {lineno}, column 1: unexpected ARFF header content {line[:40]!r}")
    if not in_data:
        raise DataError("ARFF input has no @data section")
    t = _resolve_target(names, target_column)
    for j, kind in enumerate(kinds):
        if j != t and kind not in ("numeric", "real", "integer"):
            raise DataError(f"ARFF attribute {names[j]!r} has non-numeric type {kind!r}")
    return _build(dataset_id, names, rows, lines, target_column)


def load_table(source, format: str = "csv", target_column=-1, dataset_id: str | None = None) -> Dataset:
    """Read a CSV or ARFF table into a :class:`Dataset`.

    The target column is removed from the feature matrix and kept as raw
    labels; call :func:`validate` to get integer-encoded labels.
    """
    text, default_id = _read_source(source)
    dataset_id = dataset_id or default_id
    fmt = format.lower()
    if fmt == "csv":
        return _load_csv(text, dataset_id, target_column)
    if fmt == "arff":
        return _load_arff(text, dataset_id, target_column)
    raise DataError(f"unsupported format {format!r}")


# --------------------------------------------------------------------------- validation

def validate(ds: Dataset) -> Dataset:
    X = np.asarray(ds.X, dtype=float)
    if X.ndim != 2:
        raise DataError(f"feature matrix must be 2-D, got shape {X.shape}")
    n, d = X.shape
    if n < 2:
        raise DataError(f"dataset {ds.id!r} has n={n} < 2 samples")
    if d < 1:
        raise DataError(f"dataset {ds.id!r} has no features")
    bad = np.argwhere(~np.isfinite(X))
    if bad.size:
        r, col = bad[0]
        raise DataError(f"non-finite value at (row {r}, column {col}) [{ds.feature_names[col]!r}]")
    y = np.asarray(ds.y)
    if y.shape != (n,):
        raise DataError(f"label vector has shape {y.shape}, expected ({n},)")
    if ds.encoded:
        codes = y.astype(int)
        labels = list(ds.class_labels)
    else:
        labels = list(dict.fromkeys(y.tolist()))
        lookup = {lab: i for i, lab in enumerate(labels)}
        codes = np.fromiter((lookup[v] for v in y.tolist()), dtype=int, count=n)
    if len(labels) < 2:
        raise DataError(f"dataset {ds.id!r} has c = {len(labels)} < 2 classes")
    counts = np.bincount(codes, minlength=len(labels))
    if np.any(counts < 2):
        small = [labels[i] for i in np.flatnonzero(counts < 2)]
        raise DataError(f"classes {small} have fewer than 2 samples; cannot stratify")
    return Dataset(id=ds.id, X=X, y=codes, feature_names=list(ds.feature_names),
                   class_labels=labels, encoded=True)


def from_arrays(X, y, dataset_id: str = "array", feature_names=None) -> Dataset:
    """Build and validate a dataset from in-memory arrays."""
    X = np.asarray(X, dtype=float)
    names = list(feature_names) if feature_names is not None else [f"x{j}" for j in range(X.shape[1])]
    y = np.asarray(y)
    return validate(Dataset(id=dataset_id, X=X, y=y, feature_names=names,
                            class_labels=list(dict.fromkeys(y.tolist()))))


# --------------------------------------------------------------------------- scaling

def fit_scaler(X: np.ndarray) -> ScalerStats:
    X = np.asarray(X, dtype=float)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    constant = ~(std > 0)
    std = np.where(constant, 1.0, std)
    return ScalerStats(mean=mean, std=std, constant=constant)


def standardize(ds: Dataset, stats: ScalerStats | None = None) -> tuple[Dataset, ScalerStats]:
    """Z-score features; fit on ``ds`` unless train-fold ``stats`` are supplied."""
    if stats is None:
        stats = fit_scaler(ds.X)
    elif stats.mean.shape[0] != ds.d:
        raise DataError(f"scaler has {stats.mean.shape[0]} features, dataset has {ds.d}")
    return replace(ds, X=stats.transform(ds.X)), stats


# --------------------------------------------------------------------------- folds

def stratified_kfold(ds: Dataset, k: int = 10, seed: int = 0) -> list[FoldSplit]:
    """Stratified k-fold partition, deterministic in ``seed``.

    Each class is shuffled and dealt round-robin over the folds, continuing the
    deal across classes so fold sizes also stay balanced.
    """
    n = ds.n
    if k < 2:
        raise DataError(f"k must be >= 2, got {k}")
    if k > n:
        raise DataError(f"k={k} exceeds the number of samples n={n}")
    y = np.asarray(ds.y)
    rng = np.random.default_rng(seed)
    classes = list(dict.fromkeys(y.tolist()))
    fold_of = np.empty(n, dtype=int)
    pos = 0
    for cls in classes:
        members = np.flatnonzero(y == cls)
        if members.size < k:
            warnings.warn(f"class {cls!r} has {members.size} < k={k} samples; "
                          "some folds will not contain it", stacklevel=2)
        members = members[rng.permutation(members.size)]
        fold_of[members] = (pos + np.arange(members.size)) % k
        pos += members.size
    all_idx = np.arange(n)
    return [
        FoldSplit(fold_index=f, train_idx=all_idx[fold_of != f], test_idx=all_idx[fold_of == f])
        for f in range(k)
    ]


# --------------------------------------------------------------------------- OpenML

class FetchError(RuntimeError):
    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


def default_cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV) or Path.home() / ".cache" / "genhull")


def _http_get(session, url: str):
    try:
        resp = session.get(url, timeout=60)
    except Exception as exc:  # requests.RequestException and socket errors alike
        raise FetchError(f"GET {url} failed: {exc}") from exc
    if resp.status_code != 200:
        raise FetchError(f"GET {url} returned HTTP {resp.status_code}", status=resp.status_code)
    return resp


def fetch_openml(dataset_id: int, cache_dir=None, session=None) -> Path:
    """Download an OpenML dataset (description + ARFF) into ``cache_dir/<id>/``.

    Returns the path of the cached ARFF file. A warm cache is verified against
    the stored MD5 checksum and served without touching the network.
    """
    from filelock import FileLock

    cache = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    target = cache / str(int(dataset_id))
    target.mkdir(parents=True, exist_ok=True)
    desc_path = target / "description.json"
    data_path = target / "data.arff"

    with FileLock(str(target / ".lock")):
        if desc_path.exists() and data_path.exists():
            desc = json.loads(desc_path.read_text())
            _verify_checksum(data_path, desc)
            return data_path

        if session is None:
            import requests
            session = requests.Session()
        desc = _http_get(session, f"{OPENML_API}/data/{int(dataset_id)}").json()["data_set_description"]
        try:
            quals = _http_get(session, f"{OPENML_API}/data/qualities/{int(dataset_id)}").json()
            desc["_qualities"] = {q["name"]: q["value"] for q in quals["data_qualities"]["quality"]}
        except (FetchError, KeyError, TypeError, ValueError) as exc:
            logger.warning("no qualities for OpenML dataset %s: %s", dataset_id, exc)
        payload = _http_get(session, desc["url"]).content
        expected = desc.get("md5_checksum")
        if expected and hashlib.md5(payload).hexdigest() != expected:
            raise FetchError(f"downloaded data for OpenML id {dataset_id} fails MD5 check")
        tmp = data_path.with_suffix(".tmp")
        tmp.write_bytes(payload)
        tmp.replace(data_path)
        desc_path.write_text(json.dumps(desc, indent=1, sort_keys=True))
    return data_path


def _verify_checksum(path: Path, desc: dict) -> None:
    expected = desc.get("md5_checksum")
    if expected and hashlib.md5(path.read_bytes()).hexdigest() != expected:
        raise FetchError(f"cached file {path} fails MD5 check (expected {expected})")


def openml_description(dataset_id: int, cache_dir=None) -> dict:
    cache = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    return json.loads((cache / str(int(dataset_id)) / "description.json").read_text())


def load_openml(dataset_id: int, cache_dir=None, session=None) -> Dataset:
    """Fetch (or reuse) an OpenML dataset and load it with its default target."""
    path = fetch_openml(dataset_id, cache_dir, session=session)
    desc = openml_description(dataset_id, cache_dir)
    target = desc.get("default_target_attribute") or -1
    if isinstance(target, str) and "," in target:
        raise DataError(f"OpenML id {dataset_id} has multiple targets: {target}")
    ds = load_table(path, format="arff", target_column=target, dataset_id=f"openml-{int(dataset_id)}")
    return validate(ds)


def published_shape(dataset_id: int, cache_dir=None) -> tuple[int, int] | None:
    """(n, d) from the cached OpenML qualities, excluding the target column."""
    q = openml_description(dataset_id, cache_dir).get("_qualities")
    if not q:
        return None
    n = float(q["NumberOfInstances"])
    d = float(q["NumberOfFeatures"]) - 1
    if math.isnan(n) or math.isnan(d):
        return None
    return int(n), int(d)
