"""Convex-hull membership via Phase-I simplex feasibility.

A point z lies in conv(X) iff there is y >= 0 with X.T @ y = z and sum(y) = 1.
No hull facets are ever built; each query is an independent small LP.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-7
PIVOT_TOL = 1e-11
DEGENERACY_STREAK = 8


class Feasibility(enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    INDETERMINATE = "indeterminate"


class HullIndeterminate(RuntimeError):
    """The Phase-I solver hit its iteration cap before deciding."""


@dataclass(frozen=True)
class PhaseOneProblem:
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if A.ndim != 2 or b.shape != (A.shape[0],):
            raise ValueError(f"incompatible shapes A{A.shape}, b{b.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_points(cls, X_train: np.ndarray, z: np.ndarray) -> "PhaseOneProblem":
        X_train = np.asarray(X_train, dtype=float)
        z = np.asarray(z, dtype=float)
        n = X_train.shape[0]
        return cls(A=np.vstack([X_train.T, np.ones((1, n))]), b=np.append(z, 1.0))

    @property
    def c(self) -> np.ndarray:
        return np.zeros(self.A.shape[1])


@dataclass(frozen=True)
class PhaseOneResult:
    status: Feasibility
    objective: float
    iterations: int
    y: np.ndarray | None = None


def phase1_feasible(p: PhaseOneProblem, tol: float = DEFAULT_TOL,
                    max_iter: int | None = None) -> PhaseOneResult:
    """Decide whether ``A y = b, y >= 0`` has a solution.

    Rows are equilibrated, artificial variables are added and their sum is
    minimized with a dense tableau simplex. Dantzig pricing is used until a
    streak of degenerate pivots, after which Bland's rule takes over for good.
    """
    A = p.A.copy()
    b = p.b.copy()
    m, n = A.shape
    if max_iter is None:
        max_iter = 50 * (n + m)

    scale = np.max(np.abs(A), axis=1)
    scale[scale == 0] = 1.0
    A /= scale[:, None]
    b /= scale
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # tableau [A | I | b]; artificials start in the basis
    T = np.zeros((m, n + m + 1))
    T[:, :n] = A
    T[:, n:n + m] = np.eye(m)
    T[:, -1] = b
    basis = np.arange(n, n + m)
    # reduced costs of the structural columns; objective = sum of artificials
    cost = np.zeros(n + m + 1)
    cost[:n] = -A.sum(axis=0)
    cost[-1] = -b.sum()

    bland = False
    streak = 0
    it = 0
    while True:
        obj = -cost[-1]
        if obj <= tol:
            return PhaseOneResult(Feasibility.FEASIBLE, max(obj, 0.0), it, _extract_y(T, basis, n))
        red = cost[:n]
        if bland:
            cand = np.flatnonzero(red < -PIVOT_TOL)
            if cand.size == 0:
                break
            j = int(cand[0])
        else:
            j = int(np.argmin(red))
            if red[j] >= -PIVOT_TOL:
                break
        if it >= max_iter:
            return PhaseOneResult(Feasibility.INDETERMINATE, obj, it)
        col = T[:, j]
        pos = col > PIVOT_TOL
        if not np.any(pos):
            # unbounded direction cannot occur in Phase I (objective bounded below by 0)
            return PhaseOneResult(Feasibility.INDETERMINATE, obj, it)
        ratios = np.full(m, np.inf)
        ratios[pos] = T[pos, -1] / col[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12 * max(1.0, best))
        # leaving variable: smallest basic index among ties (Bland-compatible)
        r = int(ties[np.argmin(basis[ties])])
        if best <= 1e-12:
            streak += 1
            if streak >= DEGENERACY_STREAK:
                bland = True
        else:
            streak = 0

        piv_row = T[r] / T[r, j]
        T -= np.outer(T[:, j], piv_row)
        T[r] = piv_row
        cost -= cost[j] * piv_row
        basis[r] = j
        it += 1

    obj = -cost[-1]
    if obj <= tol:
        return PhaseOneResult(Feasibility.FEASIBLE, max(obj, 0.0), it, _extract_y(T, basis, n))
    return PhaseOneResult(Feasibility.INFEASIBLE, obj, it)


def _extract_y(T: np.ndarray, basis: np.ndarray, n: int) -> np.ndarray:
    y = np.zeros(n)
    structural = basis < n
    y[basis[structural]] = np.clip(T[structural, -1], 0.0, None)
    return y


def bbox_prefilter(X_train: np.ndarray, z: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """True when ``z`` is definitely outside (beyond the training bounding box).

    Never returns True for a point of the hull.
    """
    X_train = np.asarray(X_train, dtype=float)
    z = np.asarray(z, dtype=float)
    if X_train.shape[1] != z.shape[0]:
        raise ValueError(f"dimension mismatch: X has {X_train.shape[1]} columns, z has {z.shape[0]}")
    lo = X_train.min(axis=0)
    hi = X_train.max(axis=0)
    slack = tol * np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
    return bool(np.any(z < lo - slack) or np.any(z > hi + slack))


class HullOracle:
    """Repeated membership queries against one training set.

    Caches the bounding box and, when the constraint matrix has more rows
    than columns (d + 1 > n), an orthonormal basis of its range. In that case
    the LP is solved on the compressed system R y = U.T b after checking that b
    lies in range(A); this is an exact reformulation, not a shortcut.
    """

    def __init__(self, X_train: np.ndarray, tol: float = DEFAULT_TOL):
        X = np.asarray(X_train, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1:
            raise ValueError("training matrix must be 2-D with at least one row")
        self.X = X
        self.tol = tol
        self.n, self.d = X.shape
        self.lo = X.min(axis=0)
        self.hi = X.max(axis=0)
        self.slack = tol * np.maximum(1.0, np.maximum(np.abs(self.lo), np.abs(self.hi)))
        self.A = np.vstack([X.T, np.ones((1, self.n))])
        self.U = None
        if self.d + 1 > self.n:
            U, s, Vt = np.linalg.svd(self.A, full_matrices=False)
            rank = int(np.sum(s > s[0] * max(self.A.shape) * np.finfo(float).eps))
            self.U = U[:, :rank]
            self.A_red = s[:rank, None] * Vt[:rank]

    def solve(self, z: np.ndarray) -> PhaseOneResult:
        b = np.append(np.asarray(z, dtype=float), 1.0)
        if self.U is None:
            return phase1_feasible(PhaseOneProblem(self.A, b), self.tol)
        coef = self.U.T @ b
        resid = np.linalg.norm(b - self.U @ coef)
        if resid > self.tol * max(1.0, np.linalg.norm(b)):
            return PhaseOneResult(Feasibility.INFEASIBLE, float(resid), 0)
        return phase1_feasible(PhaseOneProblem(self.A_red, coef), self.tol)

    def contains(self, z: np.ndarray) -> bool:
        z = np.asarray(z, dtype=float)
        if z.shape != (self.d,):
            raise ValueError(f"point has shape {z.shape}, expected ({self.d},)")
        if np.any(z < self.lo - self.slack) or np.any(z > self.hi + self.slack):
            return False
        res = self.solve(z)
        if res.status is Feasibility.INDETERMINATE:
            raise HullIndeterminate(
                f"Phase-I simplex undecided after {res.iterations} iterations (objective {res.objective:.3g})"
            )
        return res.status is Feasibility.FEASIBLE


def point_in_hull(X_train: np.ndarray, z: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``z`` is a convex combination of the rows of ``X_train``."""
    X_train = np.asarray(X_train, dtype=float)
    z = np.asarray(z, dtype=float)
    if X_train.ndim != 2 or X_train.shape[1] != z.shape[-1]:
        raise ValueError(f"dimension mismatch: X{X_train.shape}, z{z.shape}")
    return HullOracle(X_train, tol).contains(z)


@dataclass(frozen=True)
class HullSplit:
    inside_idx: np.ndarray
    outside_idx: np.ndarray

    @property
    def n_test(self) -> int:
        return self.inside_idx.size + self.outside_idx.size

    @property
    def T_in(self) -> float:
        return self.inside_idx.size / self.n_test

    @property
    def T_out(self) -> float:
        return self.outside_idx.size / self.n_test

    def to_dict(self) -> dict:
        return {
            "inside_idx": self.inside_idx.tolist(),
            "outside_idx": self.outside_idx.tolist(),
            "T_in": self.T_in,
            "T_out": self.T_out,
        }


def split_by_hull(X_train: np.ndarray, X_test: np.ndarray, tol: float = DEFAULT_TOL,
                  workers: int = 1) -> HullSplit:
    """Partition test rows into those inside / outside the training hull."""
    X_train = np.asarray(X_train, dtype=float)
    X_test = np.asarray(X_test, dtype=float)
    if X_test.ndim != 2 or X_test.shape[0] == 0:
        raise ValueError("empty test set")
    if X_train.shape[1] != X_test.shape[1]:
        raise ValueError(f"train has d={X_train.shape[1]}, test has d={X_test.shape[1]}")
    oracle = HullOracle(X_train, tol)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            flags = list(pool.map(oracle.contains, X_test))
    else:
        flags = [oracle.contains(z) for z in X_test]
    flags = np.asarray(flags, dtype=bool)
    return HullSplit(inside_idx=np.flatnonzero(flags), outside_idx=np.flatnonzero(~flags))
