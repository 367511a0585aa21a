"""Cross-dataset meta-analysis: meta-table, correlation matrix, reference association formulas."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .harness import METRIC_FIELDS, dataset_means
from .numerics import erf, erfc
from .symreg import Formula, SRConfig, r_squared, sr_search

PROFILE_COLUMNS = ("n", "d", "c", "lambda", "rho", "gamma", "kappa", "eta", "idim",
                   "idim_ratio", "noise", "mean_dist", "std_dist", "ci")

# classifier tags used by the reference formulas
CLASSIFIER_TAGS = {"LR": "logreg", "SVC": "svc", "RF": "forest"}


@dataclass
class MetaTable:
    """Column store with one row per (dataset, classifier)."""

    keys: list  # (dataset_id, classifier)
    columns: dict

    def __post_init__(self):
        n = len(self.keys)
        for name, col in self.columns.items():
            col = np.asarray(col, dtype=float)
            if col.shape != (n,):
                raise ValueError(f"column {name!r} has {col.shape[0]} rows, expected {n}")
            self.columns[name] = col

    def __len__(self) -> int:
        return len(self.keys)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise KeyError(f"meta-table has no column {name!r}") from None

    def where_classifier(self, classifier: str) -> "MetaTable":
        idx = [i for i, (_, clf) in enumerate(self.keys) if clf == classifier]
        return self.take(idx)

    def unique_datasets(self) -> "MetaTable":
        seen, idx = set(), []
        for i, (ds, _) in enumerate(self.keys):
            if ds not in seen:
                seen.add(ds)
                idx.append(i)
        return self.take(idx)

    def take(self, idx) -> "MetaTable":
        idx = list(idx)
        return MetaTable([self.keys[i] for i in idx], {k: v[idx] for k, v in self.columns.items()})

    def write_csv(self, path) -> None:
        names = list(self.columns)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["dataset_id", "classifier"] + names)
            for i, (ds, clf) in enumerate(self.keys):
                w.writerow([ds, clf] + [repr(float(self.columns[k][i])) for k in names])


def build_meta_table(profiles, records) -> MetaTable:
    """Join per-dataset meta-features with per-(dataset, classifier) fold means.

    ``profiles`` are MetricVector dicts (``to_dict()`` output or CSV rows).
    """
    prof = {str(p["dataset_id"]): p for p in profiles}
    keys, rows = [], []
    for row in dataset_means(records):
        p = prof.get(row["dataset_id"])
        if p is None:
            continue
        keys.append((row["dataset_id"], row["classifier"]))
        merged = {k: float(p[k]) for k in PROFILE_COLUMNS}
        merged.update({k: row[k] for k in METRIC_FIELDS})
        rows.append(merged)
    names = list(PROFILE_COLUMNS) + list(METRIC_FIELDS)
    return MetaTable(keys, {k: np.array([r[k] for r in rows], dtype=float) for k in names})


def read_profiles_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


# --------------------------------------------------------------------------- correlations

def correlation_matrix(t: MetaTable, columns) -> np.ndarray:
    """Pearson correlations over pairwise-complete rows; NaN where undefined."""
    if len(t) < 3:
        raise ValueError("correlation matrix needs at least 3 rows")
    cols = [t.column(c) for c in columns]
    k = len(cols)
    out = np.full((k, k), np.nan)
    for i in range(k):
        for j in range(i, k):
            a, b = cols[i], cols[j]
            ok = np.isfinite(a) & np.isfinite(b)
            if ok.sum() < 3:
                continue
            x = a[ok] - a[ok].mean()
            y = b[ok] - b[ok].mean()
            sx = math.sqrt(float(x @ x))
            sy = math.sqrt(float(y @ y))
            if sx == 0 or sy == 0:
                continue
            r = 1.0 if i == j else float(np.clip((x @ y) / (sx * sy), -1.0, 1.0))
            out[i, j] = out[j, i] = r
    return out


def _color(r: float) -> str:
    if not math.isfinite(r):
        return "#cccccc"
    # diverging blue-white-red
    t = (r + 1.0) / 2.0
    if t < 0.5:
        u = t / 0.5
        rgb = (int(59 + u * 196), int(76 + u * 179), int(192 + u * 63))
    else:
        u = (t - 0.5) / 0.5
        rgb = (255 - int(u * 75), 255 - int(u * 231), 255 - int(u * 217))
    return "#%02x%02x%02x" % rgb


def heatmap_svg(matrix: np.ndarray, labels, cell: int = 34) -> str:
    k = len(labels)
    margin = 90
    size = margin + k * cell + 10
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'font-family="sans-serif" font-size="10">']
    for i, lab in enumerate(labels):
        y = margin + i * cell + cell / 2 + 3
        parts.append(f'<text x="{margin - 4}" y="{y:.1f}" text-anchor="end">{lab}</text>')
        x = margin + i * cell + cell / 2
        parts.append(f'<text x="{x:.1f}" y="{margin - 4}" text-anchor="start" '
                     f'transform="rotate(-60 {x:.1f} {margin - 4})">{lab}</text>')
    for i in range(k):
        for j in range(k):
            r = matrix[i, j]
            x = margin + j * cell
            y = margin + i * cell
            parts.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{_color(r)}" stroke="#fff"/>')
            txt = f"{r:.2f}" if math.isfinite(r) else "na"
            parts.append(f'<text x="{x + cell / 2:.1f}" y="{y + cell / 2 + 3:.1f}" text-anchor="middle">{txt}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# --------------------------------------------------------------------------- reference formulas

def _step(x):
    return (np.asarray(x) > 0).astype(float)


@dataclass(frozen=True)
class FixedEquation:
    name: str
    target: str
    classifier: str | None  # None: one row per dataset
    variables: tuple
    expression: str
    fn: object
    reference_r2: float

    def predict(self, values: dict) -> np.ndarray:
        missing = [v for v in self.variables if v not in values]
        if missing:
            raise KeyError(f"{self.name} needs column(s) {missing}")
        return self.fn(**{v: np.asarray(values[v], dtype=float) for v in self.variables})


FIXED_EQUATIONS = (
    FixedEquation(
        "F1_in_LR", "F1_in", "LR", ("F1_train", "idim_ratio"),
        "0.857 + (0.959*F1_train - 0.831) * step(2.38*idim_ratio - 0.0019)",
        lambda F1_train, idim_ratio: 0.857 + (0.959 * F1_train - 0.831) * _step(2.38 * idim_ratio - 0.0019),
        0.68,
    ),
    FixedEquation(
        "F1_out_LR", "F1_out", "LR", ("F1_train", "lambda", "noise"),
        "0.843*F1_train + 0.176*lambda - 0.040 - 0.097*noise",
        lambda F1_train, noise, **kw: 0.843 * F1_train + 0.176 * kw["lambda"] - 0.040 - 0.097 * noise,
        0.47,
    ),
    FixedEquation(
        "F1_in_SVC", "F1_in", "SVC", ("F1_train", "std_dist", "c"),
        "1.072*F1_train + 0.021*std_dist - 0.08 - 0.003*c",
        lambda F1_train, std_dist, c: 1.072 * F1_train + 0.021 * std_dist - 0.08 - 0.003 * c,
        0.67,
    ),
    FixedEquation(
        "F1_out_SVC", "F1_out", "SVC", ("F1_train", "idim_ratio"),
        "0.820 + (1.605*F1_train - 1.389) * cos(5.424 + 2.377*idim_ratio)",
        lambda F1_train, idim_ratio: 0.820 + (1.605 * F1_train - 1.389) * np.cos(5.424 + 2.377 * idim_ratio),
        0.45,
    ),
    FixedEquation(
        "F1_in_RF", "F1_in", "RF", ("rho",),
        "7.66*rho - 1.822 - 5.266*rho^2",
        lambda rho: 7.66 * rho - 1.822 - 5.266 * rho ** 2,
        0.36,
    ),
    FixedEquation(
        "F1_out_RF", "F1_out", "RF", ("rho",),
        "0.818 + (1.237*rho - 0.767) * erfc(4.65*rho - 2.883)",
        lambda rho: 0.818 + (1.237 * rho - 0.767) * erfc(4.65 * rho - 2.883),
        0.28,
    ),
    FixedEquation(
        "T_in", "T_in", None, ("rho", "noise"),
        "0.46 + 0.42 * erf(4.65*rho - 2.20 - 2.98*noise)",
        lambda rho, noise: 0.46 + 0.42 * erf(4.65 * rho - 2.20 - 2.98 * noise),
        0.88,
    ),
)


def fixed_equation(name: str) -> FixedEquation:
    for eq in FIXED_EQUATIONS:
        if eq.name == name:
            return eq
    raise KeyError(f"no reference equation named {name!r}")


def eval_fixed_equations(t: MetaTable, classifier_tags: dict | None = None) -> dict:
    """Evaluate every reference formula on the matching rows of ``t``.

    Returns ``{name: {"rows", "r2", "reference_r2", "predictions"}}``; equations
    for classifiers absent from the table report ``rows = 0`` and ``r2 = None``.
    """
    tags = dict(CLASSIFIER_TAGS, **(classifier_tags or {}))
    report = {}
    for eq in FIXED_EQUATIONS:
        sub = t.unique_datasets() if eq.classifier is None else t.where_classifier(tags[eq.classifier])
        entry = {"expression": eq.expression, "target": eq.target, "classifier": eq.classifier,
                 "reference_r2": eq.reference_r2, "rows": len(sub), "r2": None, "predictions": []}
        if len(sub):
            values = {v: sub.column(v) for v in eq.variables}
            pred = eq.predict(values)
            obs = sub.column(eq.target)
            ok = np.isfinite(pred) & np.isfinite(obs)
            entry["rows"] = int(ok.sum())
            entry["predictions"] = [float(p) for p in pred]
            if ok.sum() >= 2 and np.ptp(obs[ok]) > 0:
                entry["r2"] = r_squared(obs[ok], pred[ok])
        report[eq.name] = entry
    return report


# --------------------------------------------------------------------------- symbolic regression

DEFAULT_SR_INPUTS = ("n", "d", "c", "lambda", "rho", "gamma", "kappa", "eta", "idim_ratio",
                     "noise", "mean_dist", "std_dist", "F1_train")


def fit_fronts(t: MetaTable, targets=("F1_in", "F1_out"), inputs=DEFAULT_SR_INPUTS,
               cfg: SRConfig = SRConfig()) -> dict:
    """Pareto fronts per (classifier, target) over complete rows."""
    out = {}
    for clf in sorted({k[1] for k in t.keys}):
        sub = t.where_classifier(clf)
        for target in targets:
            y = sub.column(target)
            cols = {v: sub.column(v) for v in inputs}
            ok = np.isfinite(y) & np.all([np.isfinite(c) for c in cols.values()], axis=0)
            key = f"{clf}:{target}"
            if ok.sum() < 10 or np.ptp(y[ok]) == 0:
                out[key] = {"rows": int(ok.sum()), "front": [], "skipped": "needs >= 10 complete rows"}
                continue
            front = sr_search({k: v[ok] for k, v in cols.items()}, y[ok], cfg)
            out[key] = {"rows": int(ok.sum()), "front": [f.to_dict() for f in front]}
    return out

