"""Dataset meta-features: simple counts, class-wise statistics and Euclidean shape."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist
from scipy.special import digamma

from .ingest import Dataset, standardize
from .numerics import covariance_eigenvalues, f_sf

EXACT_PAIR_LIMIT = 2000
SAMPLED_PAIRS = 2_000_000
MI_NEIGHBORS = 3


class MetricWarning(UserWarning):
    """A metric skipped degenerate input (constant feature, tiny class, ...)."""


@dataclass
class MetricVector:
    dataset_id: str
    n: int
    d: int
    c: int
    lambda_: float
    rho: float
    gamma: float
    kappa: float
    eta: float
    idim: int
    idim_ratio: float
    noise: float
    mean_dist: float
    std_dist: float
    ci: float

    def to_dict(self) -> dict:
        return {("lambda" if k == "lambda_" else k): v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, row: dict) -> "MetricVector":
        row = dict(row)
        row["lambda_"] = row.pop("lambda")
        kw = {}
        for name, f in cls.__dataclass_fields__.items():
            v = row[name]
            kw[name] = v if f.type == "str" else (int(float(v)) if f.type == "int" else float(v))
        return cls(**kw)

    def check(self) -> None:
        vals = [v for k, v in asdict(self).items() if k != "dataset_id"]
        if not all(np.isfinite(vals)):
            raise ValueError(f"non-finite metric in {self}")
        if self.idim_ratio + self.noise != 1.0:
            raise ValueError("idim_ratio + noise must equal 1")
        if not (0 <= self.lambda_ <= 1 and 0 <= self.rho <= 1 and 0 <= self.ci <= 1 and self.eta >= 0):
            raise ValueError(f"metric outside its range: {self}")
        if not 1 <= self.idim <= self.d:
            raise ValueError(f"idim={self.idim} outside [1, {self.d}]")


def _groups(ds: Dataset):
    y = np.asarray(ds.y)
    return [(cls, np.flatnonzero(y == cls)) for cls in np.unique(y)]


def simple_metrics(ds: Dataset) -> tuple[int, int, int]:
    return ds.n, ds.d, len(np.unique(ds.y))


def levene_pvalues(ds: Dataset) -> np.ndarray:
    """Per-feature p-values of the mean-centred Levene test across classes.

    Features whose absolute deviations are all zero (constant inside every
    class) have an undefined statistic and get NaN.
    """
    X = np.asarray(ds.X, dtype=float)
    groups = [idx for _, idx in _groups(ds)]
    k = len(groups)
    N = X.shape[0]
    if k < 2:
        raise ValueError("Levene test needs at least two classes")
    if any(idx.size < 2 for idx in groups):
        raise ValueError("Levene test needs at least two samples per class")
    Z = np.empty_like(X)
    zbar_i = np.empty((k, X.shape[1]))
    sizes = np.array([idx.size for idx in groups], dtype=float)
    for g, idx in enumerate(groups):
        Z[idx] = np.abs(X[idx] - X[idx].mean(axis=0))
        zbar_i[g] = Z[idx].mean(axis=0)
    zbar = Z.mean(axis=0)
    between = np.sum(sizes[:, None] * (zbar_i - zbar) ** 2, axis=0)
    within = np.zeros(X.shape[1])
    for g, idx in enumerate(groups):
        within += np.sum((Z[idx] - zbar_i[g]) ** 2, axis=0)
    p = np.full(X.shape[1], np.nan)
    for j in range(X.shape[1]):
        if within[j] > 0:
            w = (N - k) / (k - 1) * between[j] / within[j]
            p[j] = f_sf(w, k - 1, N - k)
        elif between[j] > 0:
            p[j] = 0.0
    return p


def levene_lambda(ds: Dataset) -> float:
    p = levene_pvalues(ds)
    skipped = np.isnan(p)
    if skipped.any():
        warnings.warn(f"Levene statistic undefined for {int(skipped.sum())} feature(s); skipped",
                      MetricWarning, stacklevel=2)
    if skipped.all():
        return float("nan")
    return float(np.mean(p[~skipped]))


def classwise_correlation(ds: Dataset) -> float:
    """Mean absolute Pearson correlation over feature pairs, then over classes."""
    if ds.d < 2:
        raise ValueError("class-wise correlation needs at least two features (d >= 2)")
    iu = np.triu_indices(ds.d, k=1)
    per_class = []
    skipped = 0
    for _, idx in _groups(ds):
        if idx.size < 2:
            raise ValueError("class-wise correlation needs at least two samples per class")
        Xc = ds.X[idx]
        Xc = Xc - Xc.mean(axis=0)
        sd = np.sqrt(np.sum(Xc * Xc, axis=0))
        ok = sd > 0
        with np.errstate(invalid="ignore", divide="ignore"):
            r = (Xc.T @ Xc) / np.outer(sd, sd)
        vals = np.abs(r[iu])
        valid = ok[iu[0]] & ok[iu[1]]
        skipped += int((~valid).sum())
        if valid.any():
            per_class.append(np.mean(np.clip(vals[valid], 0.0, 1.0)))
    if skipped:
        warnings.warn(f"{skipped} class-wise feature pair(s) with a constant feature skipped",
                      MetricWarning, stacklevel=2)
    if not per_class:
        return float("nan")
    return float(np.mean(per_class))


def _standard_moments(x: np.ndarray):
    xc = x - x.mean(axis=0)
    m2 = np.mean(xc ** 2, axis=0)
    m3 = np.mean(xc ** 3, axis=0)
    m4 = np.mean(xc ** 4, axis=0)
    ok = m2 > 1e-14 * np.maximum(1.0, np.mean(x ** 2, axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        skew = np.where(ok, m3 / m2 ** 1.5, np.nan)
        kurt = np.where(ok, m4 / m2 ** 2, np.nan)
    return skew, kurt


def classwise_moments(ds: Dataset) -> tuple[float, float]:
    """Signed skewness and (non-excess) kurtosis aggregated class-wise.

    Per class: plain mean over features. Across classes: weighted by class size.
    """
    skews, kurts, w_s, w_k = [], [], [], []
    degenerate = 0
    for _, idx in _groups(ds):
        s, k = _standard_moments(ds.X[idx])
        degenerate += int(np.isnan(s).sum())
        if idx.size >= 3 and np.any(~np.isnan(s)):
            skews.append(np.nanmean(s))
            w_s.append(idx.size)
        if idx.size >= 4 and np.any(~np.isnan(k)):
            kurts.append(np.nanmean(k))
            w_k.append(idx.size)
    if degenerate:
        warnings.warn(f"{degenerate} zero-variance class/feature cell(s) skipped in moments",
                      MetricWarning, stacklevel=2)
    gamma = float(np.average(skews, weights=w_s)) if skews else float("nan")
    kappa = float(np.average(kurts, weights=w_k)) if kurts else float("nan")
    return gamma, kappa


def _jitter(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    sd = x.std()
    x = x / sd if sd > 0 else x.copy()
    return x + 1e-10 * max(1.0, float(np.mean(np.abs(x)))) * rng.standard_normal(x.shape)


def _mi_knn(x: np.ndarray, y: np.ndarray, k: int) -> float:
    # nearest-neighbour estimator for a continuous variable and a discrete one
    n = x.size
    pts = x[:, None]
    radius = np.empty(n)
    label_counts = np.empty(n)
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        tree = cKDTree(pts[idx])
        dist, _ = tree.query(pts[idx], k=k + 1)
        radius[idx] = np.nextafter(dist[:, -1], 0)
        label_counts[idx] = idx.size
    full = cKDTree(pts)
    m_all = np.asarray(full.query_ball_point(pts, radius, return_length=True), dtype=float)
    return float(digamma(n) + digamma(k) - np.mean(digamma(label_counts)) - np.mean(digamma(m_all)))


def _mi_binned(x: np.ndarray, y: np.ndarray) -> float:
    bins = max(2, int(round(math.sqrt(x.size))))
    edges = np.histogram_bin_edges(x, bins=bins)
    xb = np.clip(np.digitize(x, edges[1:-1]), 0, bins - 1)
    _, yc = np.unique(y, return_inverse=True)
    joint = np.zeros((bins, yc.max() + 1))
    np.add.at(joint, (xb, yc), 1.0)
    pxy = joint / joint.sum()
    px = pxy.sum(axis=1, keepdims=True)
    py = pxy.sum(axis=0, keepdims=True)
    nz = pxy > 0
    return float(np.sum(pxy[nz] * np.log(pxy[nz] / (px @ py)[nz])))


def feature_mutual_information(ds: Dataset, k: int = MI_NEIGHBORS, seed: int = 0) -> np.ndarray:
    """Per-feature mutual information (nats) with the class label, clamped at zero."""
    rng = np.random.default_rng(seed)
    y = np.asarray(ds.y)
    _, counts = np.unique(y, return_counts=True)
    binned = counts.min() < k + 1
    if binned:
        warnings.warn(f"smallest class has {counts.min()} < k+1={k + 1} samples; "
                      "using the binned MI estimator", MetricWarning, stacklevel=2)
    out = np.empty(ds.d)
    for j in range(ds.d):
        x = _jitter(np.asarray(ds.X[:, j], dtype=float), rng)
        out[j] = _mi_binned(x, y) if binned else _mi_knn(x, y, k)
    return np.maximum(out, 0.0)


def mutual_information(ds: Dataset, k: int = MI_NEIGHBORS, seed: int = 0) -> float:
    return float(np.mean(feature_mutual_information(ds, k, seed)))


def intrinsic_dimensionality(ds: Dataset, threshold: float = 0.90) -> tuple[int, float, float]:
    """Principal components needed to reach ``threshold`` explained variance.

    Returns ``(idim, idim_ratio, noise)`` with ``noise = 1 - idim_ratio``.
    """
    if ds.n < 2:
        raise ValueError("intrinsic dimensionality needs n >= 2")
    X = np.asarray(ds.X, dtype=float)
    sd = X.std(axis=0)
    if not np.any(sd > 0):
        raise ValueError("all features are constant")
    Z = (X - X.mean(axis=0)) / np.where(sd > 0, sd, 1.0)
    eig = covariance_eigenvalues(Z)
    cum = np.cumsum(eig) / eig.sum()
    idim = int(np.searchsorted(cum, threshold - 1e-12) + 1)
    idim = min(idim, ds.d)
    ratio = idim / ds.d
    return idim, ratio, 1.0 - ratio


def distance_stats(ds: Dataset, seed: int = 0) -> tuple[float, float]:
    """Mean and population std of pairwise Euclidean distances.

    Exact below ``EXACT_PAIR_LIMIT`` samples, otherwise estimated from
    ``SAMPLED_PAIRS`` seeded random pairs.
    """
    X = np.asarray(ds.X, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise ValueError("distance statistics need n >= 2")
    if n <= EXACT_PAIR_LIMIT:
        dist = pdist(X)
    else:
        rng = np.random.default_rng(seed)
        i = rng.integers(0, n, SAMPLED_PAIRS)
        j = rng.integers(0, n - 1, SAMPLED_PAIRS)
        j = j + (j >= i)
        dist = np.empty(SAMPLED_PAIRS)
        for s in range(0, SAMPLED_PAIRS, 200_000):
            e = s + 200_000
            dist[s:e] = np.linalg.norm(X[i[s:e]] - X[j[s:e]], axis=1)
    return float(dist.mean()), float(dist.std())


def class_imbalance(labels, n_classes: int | None = None) -> float:
    """1 - H(p) / ln(c) over the class proportions of ``labels``.

    ``c`` defaults to the number of distinct labels present; pass the
    dataset's class count to let absent classes count as imbalance.
    """
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("class imbalance of an empty label set")
    _, counts = np.unique(labels, return_counts=True)
    c = n_classes if n_classes is not None else counts.size
    if c <= 1:
        return 1.0
    p = counts / counts.sum()
    h = -np.sum(p * np.log(p))
    return float(min(1.0, max(0.0, 1.0 - h / math.log(c))))


def profile(ds: Dataset, seed: int = 0) -> MetricVector:
    """Compute every dataset-level meta-feature on the z-scored dataset."""
    n, d, c = simple_metrics(ds)
    z, _ = standardize(ds)
    lam = levene_lambda(z)
    rho = classwise_correlation(z)
    gamma, kappa = classwise_moments(z)
    eta = mutual_information(z, seed=seed)
    idim, ratio, noise = intrinsic_dimensionality(z)
    mu_d, sd_d = distance_stats(z, seed=seed)
    return MetricVector(
        dataset_id=ds.id, n=n, d=d, c=c, lambda_=lam, rho=rho, gamma=gamma, kappa=kappa,
        eta=eta, idim=idim, idim_ratio=ratio, noise=noise, mean_dist=mu_d, std_dist=sd_d,
        ci=class_imbalance(ds.y),
    )
