import hypothesis
import numpy as np
import pytest
from scipy.optimize import linprog

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")


@pytest.fixture
def unit_square():
    return np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])


# --------------------------------------------------------------------------- independent hull oracles

def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def monotone_chain(points):
    """Counter-clockwise convex hull vertices (Andrew's monotone chain)."""
    pts = sorted(map(tuple, np.asarray(points, dtype=float)))
    if len(pts) <= 2:
        return pts
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def polygon_signed_distance(hull, z):
    """Min over edges of the signed distance to the edge line (positive inside)."""
    best = np.inf
    k = len(hull)
    for i in range(k):
        a = np.asarray(hull[i])
        b = np.asarray(hull[(i + 1) % k])
        e = b - a
        dist = _cross(a, b, z) / np.hypot(*e)
        best = min(best, dist)
    return best


def polygon_contains(hull, z):
    return polygon_signed_distance(hull, z) >= 0


def reference_lp_check(X_train, x_test):
    """Reference feasibility test: scipy linprog, zero objective, default y >= 0 bounds."""
    n_points = len(X_train)
    c = np.zeros(n_points)
    A = np.r_[X_train.T, np.ones((1, n_points))]
    b = np.r_[x_test, np.ones(1)]
    lp = linprog(c, A_eq=A, b_eq=b)
    return lp.success


def lp_margin(X_train, z):
    """Largest t such that a ball-free slack of t keeps z's membership: min L1 residual of A y = b, y >= 0.

    Zero when z is inside; positive outside. Used to drop near-boundary cases.
    """
    n = len(X_train)
    A = np.r_[X_train.T, np.ones((1, n))]
    b = np.r_[z, 1.0]
    m = A.shape[0]
    # minimise sum(s+ + s-) with A y + s+ - s- = b
    c = np.r_[np.zeros(n), np.ones(2 * m)]
    res = linprog(c, A_eq=np.c_[A, np.eye(m), -np.eye(m)], b_eq=b, method="highs")
    return res.fun


def interior_margin(X_train, z):
    """max t such that z = X.T y, sum y = 1, y >= t; negative when z is outside.

    A clearly positive value means z sits in the relative interior of the hull.
    """
    n = len(X_train)
    A = np.r_[X_train.T, np.ones((1, n))]
    b = np.r_[z, 1.0]
    # variables (y, t); y - t >= 0  <=>  -y + t <= 0
    c = np.r_[np.zeros(n), -1.0]
    A_ub = np.c_[-np.eye(n), np.ones(n)]
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(n), A_eq=np.c_[A, np.zeros(len(b))], b_eq=b,
                  bounds=[(None, None)] * (n + 1), method="highs")
    return -res.fun if res.status == 0 else -np.inf


def boundary_case(X_train, z, eps=1e-6):
    """True for points too close to the hull boundary for an exact comparison."""
    if lp_margin(X_train, z) > eps:
        return False
    return interior_margin(X_train, z) < 1e-9


# --------------------------------------------------------------------------- acceptance report

ACCEPTANCE_RESULTS = {}


def report_criterion(number, ok, detail):
    ACCEPTANCE_RESULTS[number] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


def harness_invariant_report(datasets, k=10, seed=0):
    """Run CV on each dataset and check the record-level harness invariants.

    Returns (problems, rf_train_ge_test_fraction).
    """
    from collections import Counter

    from genhull.classifiers import ClassifierConfig
    from genhull.harness import run_cv
    from genhull.hull import split_by_hull
    from genhull.ingest import standardize, stratified_kfold

    classifiers = [ClassifierConfig("logreg"), ClassifierConfig("forest")]
    problems = []
    rf_hits = rf_total = 0
    for ds in datasets:
        recs = run_cv(ds, classifiers, k=k, seed=seed)
        if len(recs) != k * len(classifiers):
            problems.append(f"{ds.id}: {len(recs)} records, expected {k * len(classifiers)}")
        folds = stratified_kfold(ds, k, seed)
        for rec in recs:
            if rec.T_in + rec.T_out != 1.0:
                problems.append(f"{ds.id} fold {rec.fold_index}: T_in + T_out != 1")
            split = folds[rec.fold_index]
            tr, stats = standardize(ds.subset(split.train_idx))
            hull = split_by_hull(tr.X, stats.transform(ds.X[split.test_idx]))
            yte = ds.y[split.test_idx]
            parts = Counter(yte[hull.inside_idx].tolist()) + Counter(yte[hull.outside_idx].tolist())
            if Counter(yte.tolist()) != parts or hull.T_in != rec.T_in:
                problems.append(f"{ds.id} fold {rec.fold_index}: partition-label identity broken")
            if rec.classifier == "forest" and not rec.flagged:
                rf_total += 1
                rf_hits += rec.F1_train >= rec.F1_test
    return problems, rf_hits / max(rf_total, 1)
