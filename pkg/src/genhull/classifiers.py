"""Logistic regression and random forest written against numpy, plus weighted F1.

Other classifiers plug in through :func:`register_classifier`: a trainer takes
``(X, y, cfg)`` and returns an object with ``predict(X)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import logsumexp


@dataclass(frozen=True)
class ClassifierConfig:
    kind: str = "logreg"
    # logistic regression; C is the inverse L2 strength on the summed loss
    C: float = 1.0
    max_iter: int = 1000
    tol: float = 1e-6
    # random forest
    n_trees: int = 100
    max_features: str | int | None = "sqrt"
    bootstrap: bool = True
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.C <= 0:
            raise ValueError("C must be > 0 (L2 strength 1/C >= 0)")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")

    @property
    def name(self) -> str:
        return self.kind


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError(f"incompatible shapes X{X.shape}, y{y.shape}")
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("training data must contain at least two classes")
    return X, y, classes


# --------------------------------------------------------------------------- logistic regression

@dataclass
class LogRegModel:
    W: np.ndarray
    b: np.ndarray
    classes: np.ndarray
    converged: bool
    n_iter: int
    loss_history: list = field(default_factory=list, repr=False)
    kind: str = "logreg"

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.W + self.b

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[0] == 0:
            return np.empty(0, dtype=self.classes.dtype)
        if X.shape[1] != self.W.shape[0]:
            raise ValueError(f"model expects {self.W.shape[0]} features, got {X.shape[1]}")
        return self.classes[np.argmax(self.decision_function(X), axis=1)]


def _softmax_objective(theta, X, Y, lam):
    d = X.shape[1]
    K = Y.shape[1]
    W = theta[: d * K].reshape(d, K)
    b = theta[d * K:]
    S = X @ W + b
    lse = logsumexp(S, axis=1)
    n = X.shape[0]
    loss = (np.sum(lse) - np.sum(S * Y)) / n + 0.5 * lam * np.sum(W * W)
    P = np.exp(S - lse[:, None])
    G = (P - Y) / n
    gW = X.T @ G + lam * W
    gb = G.sum(axis=0)
    return loss, np.concatenate([gW.ravel(), gb])


def train_logreg(X, y, cfg: ClassifierConfig = ClassifierConfig()) -> LogRegModel:
    """Multinomial logistic regression by full-batch gradient descent.

    Each step starts from a Barzilai-Borwein step length and backtracks until
    the Armijo condition holds, so the loss never increases.
    """
    X, y, classes = _check_xy(X, y)
    n, d = X.shape
    K = classes.size
    Y = (y[:, None] == classes[None, :]).astype(float)
    lam = 1.0 / (cfg.C * n)
    theta = np.zeros(d * K + K)
    loss, g = _softmax_objective(theta, X, Y, lam)
    history = [loss]
    step = 1.0
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        if np.max(np.abs(g)) <= cfg.tol:
            converged = True
            it -= 1
            break
        gg = float(g @ g)
        t = step
        while True:
            cand = theta - t * g
            new_loss, new_g = _softmax_objective(cand, X, Y, lam)
            if new_loss <= loss - 1e-4 * t * gg or t < 1e-12:
                break
            t *= 0.5
        if new_loss > loss:
            # step collapsed to round-off; the current point is as good as it gets
            converged = np.max(np.abs(g)) <= math.sqrt(cfg.tol)
            break
        s = cand - theta
        dg = new_g - g
        sy = float(s @ dg)
        step = float(s @ s) / sy if sy > 0 else 2.0 * t
        step = min(max(step, 1e-8), 1e8)
        theta, loss, g = cand, new_loss, new_g
        history.append(loss)
    else:
        converged = bool(np.max(np.abs(g)) <= cfg.tol)
    W = theta[: d * K].reshape(d, K)
    b = theta[d * K:]
    return LogRegModel(W=W, b=b, classes=classes, converged=converged, n_iter=it, loss_history=history)


# --------------------------------------------------------------------------- decision trees

@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # class proportions per node

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=int)
        active = np.flatnonzero(self.left[node] >= 0)
        while active.size:
            nd = node[active]
            go_left = X[active, self.feature[nd]] <= self.threshold[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
            active = active[self.left[node[active]] >= 0]
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


def _best_split(x: np.ndarray, Yh: np.ndarray, total: np.ndarray):
    """Best Gini split on one feature; returns (impurity_sum, threshold) or None."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    valid = xs[:-1] < xs[1:]
    if not valid.any():
        return None
    cum = np.cumsum(Yh[order], axis=0)[:-1]
    m = x.size
    nl = np.arange(1, m, dtype=float)
    nr = m - nl
    right = total - cum
    # n * weighted gini = nl - sum(cl^2)/nl + nr - sum(cr^2)/nr
    score = m - np.sum(cum * cum, axis=1) / nl - np.sum(right * right, axis=1) / nr
    score = np.where(valid, score, np.inf)
    i = int(np.argmin(score))
    thr = 0.5 * (xs[i] + xs[i + 1])
    if thr >= xs[i + 1]:  # midpoint rounded up onto the right value
        thr = xs[i]
    return float(score[i]), thr


def build_tree(X: np.ndarray, y: np.ndarray, n_classes: int, max_features: int,
               rng: np.random.Generator) -> Tree:
    """Gini tree grown until leaves are pure or cannot be split."""
    Yh = np.eye(n_classes)[y]
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(counts):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(counts / counts.sum())
        return len(feature) - 1

    root_counts = Yh.sum(axis=0)
    stack = [(new_node(root_counts), np.arange(X.shape[0]), root_counts)]
    d = X.shape[1]
    while stack:
        node, idx, counts = stack.pop()
        if np.count_nonzero(counts) <= 1 or idx.size < 2:
            continue
        best = None
        perm = rng.permutation(d)
        for pos, f in enumerate(perm):
            # keep drawing features past max_features until one can split
            if pos >= max_features and best is not None:
                break
            res = _best_split(X[idx, f], Yh[idx], counts)
            if res is not None and (best is None or res[0] < best[0]):
                best = (res[0], res[1], f)
        if best is None:
            continue
        _, thr, f = best
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        lc, rc = Yh[li].sum(axis=0), Yh[ri].sum(axis=0)
        feature[node], threshold[node] = int(f), thr
        left[node] = new_node(lc)
        right[node] = new_node(rc)
        stack.append((right[node], ri, rc))
        stack.append((left[node], li, lc))
    return Tree(
        feature=np.asarray(feature), threshold=np.asarray(threshold),
        left=np.asarray(left), right=np.asarray(right), value=np.asarray(value),
    )


@dataclass
class ForestModel:
    trees: list
    classes: np.ndarray
    n_features: int
    kind: str = "forest"

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[1] != self.n_features:
            raise ValueError(f"model expects {self.n_features} features, got {X.shape[1]}")
        acc = np.zeros((X.shape[0], self.classes.size))
        for t in self.trees:
            acc += t.predict_proba(X)
        return acc / len(self.trees)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[0] == 0:
            return np.empty(0, dtype=self.classes.dtype)
        # argmax picks the lowest class index on ties
        return self.classes[np.argmax(self.predict_proba(X), axis=1)]


def _resolve_max_features(rule, d: int) -> int:
    if rule is None:
        return d
    if rule == "sqrt":
        return max(1, int(math.sqrt(d)))
    if rule == "log2":
        return max(1, int(math.log2(d)))
    return max(1, min(d, int(rule)))


def train_forest(X, y, cfg: ClassifierConfig = ClassifierConfig(kind="forest")) -> ForestModel:
    """Bagged Gini trees with per-tree seeds spawned from ``cfg.seed``."""
    X, y, classes = _check_xy(X, y)
    codes = np.searchsorted(classes, y)
    n, d = X.shape
    mf = _resolve_max_features(cfg.max_features, d)
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_trees)

    def grow(ss):
        rng = np.random.default_rng(ss)
        idx = rng.integers(0, n, n) if cfg.bootstrap else np.arange(n)
        return build_tree(X[idx], codes[idx], classes.size, mf, rng)

    if cfg.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.n_jobs) as pool:
            trees = list(pool.map(grow, seeds))
    else:
        trees = [grow(ss) for ss in seeds]
    return ForestModel(trees=trees, classes=classes, n_features=d)


# --------------------------------------------------------------------------- registry

TRAINERS: dict[str, Callable] = {
    "logreg": train_logreg,
    "forest": train_forest,
}


def register_classifier(kind: str, trainer: Callable) -> None:
    """Add a classifier kind; ``trainer(X, y, cfg)`` must return a model with ``predict``."""
    TRAINERS[kind] = trainer


def train(X, y, cfg: ClassifierConfig):
    try:
        trainer = TRAINERS[cfg.kind]
    except KeyError:
        raise ValueError(f"unknown classifier kind {cfg.kind!r}; known: {sorted(TRAINERS)}") from None
    return trainer(X, y, cfg)


def predict(model, X) -> np.ndarray:
    return model.predict(X)


# --------------------------------------------------------------------------- scoring

def weighted_f1(y_true, y_pred) -> float:
    """Support-weighted mean of per-class F1 (a class's F1 is 0 when undefined)."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    if y_true.size == 0:
        raise ValueError("weighted F1 of an empty label set")
    total = 0.0
    for cls in np.unique(y_true):
        t = y_true == cls
        p = y_pred == cls
        tp = np.sum(t & p)
        denom = t.sum() + p.sum()
        f1 = 2.0 * tp / denom if denom else 0.0
        total += t.sum() * f1
    return float(total / y_true.size)
