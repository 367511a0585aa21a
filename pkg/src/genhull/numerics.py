"""Numerical kernels: error function, regularized incomplete beta, symmetric eigensolver."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

# Above this order the cyclic Jacobi sweep gets slow in Python; LAPACK takes over.
JACOBI_MAX_ORDER = 64


def erf_family(x):
    """Return ``(erf(x), erfc(x))`` with ``erfc`` defined as ``1 - erf``.

    Accepts scalars or arrays. Scalars go through :func:`math.erf`, arrays
    through :func:`scipy.special.erf`; both are accurate to ~1e-16.
    """
    if np.ndim(x) == 0:
        e = math.erf(float(x))
        return e, 1.0 - e
    e = special.erf(np.asarray(x, dtype=float))
    return e, 1.0 - e


def erf(x):
    return erf_family(x)[0]


def erfc(x):
    return erf_family(x)[1]


def _betacf(a: float, b: float, x: float, max_iter: int = 500, eps: float = 1e-15) -> float:
    # modified Lentz evaluation of the continued fraction for I_x(a, b)
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if not (a > 0 and b > 0):
        raise ValueError(f"reg_inc_beta requires a > 0 and b > 0, got a={a}, b={b}")
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"reg_inc_beta requires x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return float(x)
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        val = front * _betacf(a, b, x) / a
    else:
        val = 1.0 - front * _betacf(b, a, 1.0 - x) / b
    return min(1.0, max(0.0, val))


def f_cdf(f: float, d1: float, d2: float) -> float:
    """CDF of the F(d1, d2) distribution."""
    if f <= 0:
        return 0.0
    if math.isinf(f):
        return 1.0
    return reg_inc_beta(d1 / 2.0, d2 / 2.0, d1 * f / (d1 * f + d2))


def f_sf(f: float, d1: float, d2: float) -> float:
    """Upper tail of the F(d1, d2) distribution, computed without cancellation."""
    if f <= 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return reg_inc_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))


@dataclass(frozen=True)
class SymmetricMatrix:
    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"symmetric matrix must be square, got shape {a.shape}")
        scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
        if a.size and np.max(np.abs(a - a.T)) > 1e-12 * scale:
            raise ValueError("matrix is not symmetric within 1e-12 relative tolerance")
        object.__setattr__(self, "data", 0.5 * (a + a.T))

    @property
    def order(self) -> int:
        return self.data.shape[0]


def jacobi_eigen(a: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns eigenvalues and eigenvectors (as columns) in no particular order.
    """
    a = np.array(a, dtype=float)
    m = a.shape[0]
    v = np.eye(m)
    if m < 2:
        return np.diag(a).copy(), v
    norm = np.linalg.norm(a)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * max(norm, 1e-300):
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q]
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :]
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise ArithmeticError("Jacobi eigensolver did not converge")
    return np.diag(a).copy(), v


def sym_eigen(s, method: str = "auto"):
    """Eigenvalues (descending) and orthonormal eigenvectors of a symmetric matrix.

    ``method`` is ``"jacobi"``, ``"lapack"`` or ``"auto"`` (Jacobi up to
    ``JACOBI_MAX_ORDER``, LAPACK beyond).
    """
    if not isinstance(s, SymmetricMatrix):
        s = SymmetricMatrix(s)
    if method == "auto":
        method = "jacobi" if s.order <= JACOBI_MAX_ORDER else "lapack"
    if method == "jacobi":
        w, v = jacobi_eigen(s.data)
    elif method == "lapack":
        w, v = np.linalg.eigh(s.data)
    else:
        raise ValueError(f"unknown eigen method {method!r}")
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def covariance_eigenvalues(x: np.ndarray) -> np.ndarray:
    """Descending eigenvalues of the sample covariance of ``x`` (rows = samples).

    When there are fewer samples than features the n x n Gram matrix is
    decomposed instead; it shares the non-zero spectrum.
    """
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    xc = x - x.mean(axis=0)
    denom = max(n - 1, 1)
    if n < d:
        w, _ = sym_eigen(xc @ xc.T / denom)
        w = np.concatenate([w, np.zeros(d - n)])
    else:
        w, _ = sym_eigen(xc.T @ xc / denom)
    return np.clip(w, 0.0, None)
