"""Cross-validation harness: per-fold F1 inside/outside the training hull, JSONL records, aggregates."""

from __future__ import annotations

import json
import logging
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .classifiers import ClassifierConfig, train, weighted_f1
from .hull import DEFAULT_TOL, HullSplit, split_by_hull
from .ingest import Dataset, FoldSplit, standardize, stratified_kfold
from .metafeatures import class_imbalance

logger = logging.getLogger(__name__)

SCORE_FIELDS = ("F1_train", "F1_test", "F1_in", "F1_out")
RATIO_FIELDS = ("T_in", "T_out")
CI_FIELDS = ("CI_train", "CI_test", "CI_in", "CI_out")
METRIC_FIELDS = SCORE_FIELDS + RATIO_FIELDS + CI_FIELDS


@dataclass
class GeneralizationRecord:
    dataset_id: str
    fold_index: int
    classifier: str
    F1_train: float | None
    F1_test: float | None
    F1_in: float | None
    F1_out: float | None
    T_in: float
    T_out: float
    CI_train: float | None
    CI_test: float | None
    CI_in: float | None
    CI_out: float | None
    flagged: bool = False
    note: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=False)

    @classmethod
    def from_dict(cls, row: dict) -> "GeneralizationRecord":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in row.items() if k in names})


def _maybe(fn, labels_true, *args):
    return fn(labels_true, *args) if len(labels_true) else None


def fold_generalization(split: FoldSplit, model, hull: HullSplit, ds: Dataset,
                        X_train_std: np.ndarray | None = None,
                        X_test_std: np.ndarray | None = None,
                        classifier: str | None = None) -> GeneralizationRecord:
    """Score one trained model on one fold and its hull partition.

    ``ds`` supplies labels; the standardized fold matrices default to
    ``ds.X`` rows when not given. Hull indices are positions within the test fold.
    """
    n_test = split.test_idx.size
    if hull.n_test != n_test:
        raise IndexError(f"hull split covers {hull.n_test} points, test fold has {n_test}")
    for idx in (hull.inside_idx, hull.outside_idx):
        if idx.size and (idx.min() < 0 or idx.max() >= n_test):
            raise IndexError("hull index out of range for the test fold")
    Xtr = ds.X[split.train_idx] if X_train_std is None else X_train_std
    Xte = ds.X[split.test_idx] if X_test_std is None else X_test_std
    ytr = ds.y[split.train_idx]
    yte = ds.y[split.test_idx]
    pred_tr = model.predict(Xtr)
    pred_te = model.predict(Xte)
    c = ds.c
    ins, outs = hull.inside_idx, hull.outside_idx
    return GeneralizationRecord(
        dataset_id=ds.id,
        fold_index=split.fold_index,
        classifier=classifier or getattr(model, "kind", type(model).__name__),
        F1_train=weighted_f1(ytr, pred_tr),
        F1_test=weighted_f1(yte, pred_te),
        F1_in=_maybe(weighted_f1, yte[ins], pred_te[ins]),
        F1_out=_maybe(weighted_f1, yte[outs], pred_te[outs]),
        T_in=hull.T_in,
        T_out=hull.T_out,
        CI_train=class_imbalance(ytr, c),
        CI_test=class_imbalance(yte, c),
        CI_in=_maybe(class_imbalance, yte[ins], c),
        CI_out=_maybe(class_imbalance, yte[outs], c),
    )


def _run_fold(ds: Dataset, split: FoldSplit, classifiers, tol: float) -> list[GeneralizationRecord]:
    train_ds, stats = standardize(ds.subset(split.train_idx))
    Xtr = train_ds.X
    Xte = stats.transform(ds.X[split.test_idx])
    ytr = train_ds.y
    hull = split_by_hull(Xtr, Xte, tol)
    missing = sorted(set(range(ds.c)) - set(np.unique(ytr).tolist()))
    records = []
    for cfg in classifiers:
        if missing:
            rec = GeneralizationRecord(
                dataset_id=ds.id, fold_index=split.fold_index, classifier=cfg.name,
                F1_train=None, F1_test=None, F1_in=None, F1_out=None,
                T_in=hull.T_in, T_out=hull.T_out,
                CI_train=class_imbalance(ytr, ds.c), CI_test=class_imbalance(ds.y[split.test_idx], ds.c),
                CI_in=None, CI_out=None, flagged=True,
                note=f"classes {missing} absent from training fold",
            )
        else:
            model = train(Xtr, ytr, cfg)
            rec = fold_generalization(split, model, hull, ds, Xtr, Xte, classifier=cfg.name)
            if getattr(model, "converged", True) is False:
                rec.note = "logistic regression hit max_iter"
        records.append(rec)
    return records


def run_cv(ds: Dataset, classifiers, k: int = 10, seed: int = 0, tol: float = DEFAULT_TOL,
           workers: int = 1) -> list[GeneralizationRecord]:
    """Stratified k-fold CV producing one record per (fold, classifier).

    Every fold is standardized with its own training statistics; the hull test
    and the classifiers share that frame.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    classifiers = [c if isinstance(c, ClassifierConfig) else ClassifierConfig(kind=c) for c in classifiers]
    folds = stratified_kfold(ds, k, seed)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_fold = list(pool.map(lambda s: _run_fold(ds, s, classifiers, tol), folds))
    else:
        per_fold = [_run_fold(ds, s, classifiers, tol) for s in folds]
    return [rec for recs in per_fold for rec in recs]


# --------------------------------------------------------------------------- persistence

def append_records(path, records) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")


def read_records(path) -> list[GeneralizationRecord]:
    out = []
    p = Path(path)
    if not p.exists():
        return out
    with open(p, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(GeneralizationRecord.from_dict(json.loads(line)))
    return out


def completed_datasets(path) -> set[str]:
    return {r.dataset_id for r in read_records(path)}


# --------------------------------------------------------------------------- aggregation

@dataclass(frozen=True)
class Cell:
    mean: float
    sem: float
    count: int


def mean_sem(values) -> Cell:
    v = np.asarray([x for x in values if x is not None], dtype=float)
    if v.size == 0:
        return Cell(float("nan"), float("nan"), 0)
    # identical values must give SEM exactly 0, not the rounding residue of the mean
    sem = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 and np.ptp(v) > 0 else 0.0
    return Cell(float(v.mean()), sem, int(v.size))


@dataclass
class AggregateSummary:
    cells: dict  # (classifier, metric) -> Cell
    total: int

    def get(self, classifier: str, metric: str) -> Cell:
        return self.cells[(classifier, metric)]

    def to_dict(self) -> dict:
        out = defaultdict(dict)
        for (clf, metric), cell in self.cells.items():
            out[clf][metric] = asdict(cell)
        return {"total_records": self.total, "cells": dict(out)}


def aggregate(records) -> AggregateSummary:
    """Mean and SEM per (classifier, metric) over present values.

    Also reports ``Delta_test/in/out = F1_train - F1_x`` over records where
    both terms are present. Flagged records are excluded.
    """
    records = [r for r in records if not r.flagged]
    if not records:
        raise ValueError("no records to aggregate")
    by_clf = defaultdict(list)
    for r in records:
        by_clf[r.classifier].append(r)
    cells = {}
    for clf, recs in by_clf.items():
        for metric in METRIC_FIELDS:
            cells[(clf, metric)] = mean_sem(getattr(r, metric) for r in recs)
        for part in ("test", "in", "out"):
            deltas = [
                r.F1_train - getattr(r, f"F1_{part}") for r in recs
                if r.F1_train is not None and getattr(r, f"F1_{part}") is not None
            ]
            cells[(clf, f"Delta_{part}")] = mean_sem(deltas)
    return AggregateSummary(cells=cells, total=len(records))


def dataset_means(records) -> list[dict]:
    """Average each metric per (dataset, classifier) for meta-analysis rows."""
    groups = defaultdict(list)
    for r in records:
        if not r.flagged:
            groups[(r.dataset_id, r.classifier)].append(r)
    rows = []
    for (ds_id, clf), recs in sorted(groups.items()):
        row = {"dataset_id": ds_id, "classifier": clf}
        for metric in METRIC_FIELDS:
            row[metric] = mean_sem(getattr(r, metric) for r in recs).mean
        rows.append(row)
    return rows
