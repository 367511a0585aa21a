"""Equicorrelated Gaussian generators and box mass fractions for sparsity demos."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import Dataset, validate


@dataclass(frozen=True)
class GaussianSpec:
    n: int
    d: int
    rho: float = 0.0
    mu: float = 0.0
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1] for a PSD equicorrelation matrix, got {self.rho}")
        if self.n < 1 or self.d < 1:
            raise ValueError(f"n and d must be positive, got n={self.n}, d={self.d}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


def equicorrelation_factor(d: int, rho: float) -> np.ndarray:
    """Lower factor L with L @ L.T equal to the d x d equicorrelation matrix.

    Cholesky is used when the matrix is positive definite; at rho == 1 (rank 1)
    the factor is the exact column of ones.
    """
    if rho >= 1.0:
        L = np.zeros((d, d))
        L[:, 0] = 1.0
        return L
    corr = np.full((d, d), rho)
    np.fill_diagonal(corr, 1.0)
    return np.linalg.cholesky(corr)


def gaussian_cloud(spec: GaussianSpec) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    z = rng.standard_normal((spec.n, spec.d))
    return spec.mu + spec.sigma * z @ equicorrelation_factor(spec.d, spec.rho).T


def two_class_gaussians(spec: GaussianSpec, delta: float) -> Dataset:
    """Balanced two-class sample; class 1 is shifted by ``delta`` on every coordinate."""
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    X = gaussian_cloud(spec)
    n0 = (spec.n + 1) // 2
    y = np.zeros(spec.n, dtype=int)
    y[n0:] = 1
    X[n0:] += delta
    ds = Dataset(
        id=f"gauss-n{spec.n}-d{spec.d}-rho{spec.rho:g}-delta{delta:g}-s{spec.seed}",
        X=X, y=y, feature_names=[f"x{j}" for j in range(spec.d)], class_labels=[0, 1],
    )
    return validate(ds)


def interval_mass_fraction(samples: np.ndarray, center: float, radius: float) -> float:
    """Fraction of rows whose every coordinate lies in ``[center - radius, center + radius]``."""
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] == 0:
        raise ValueError("empty sample set")
    inside = np.all(np.abs(x - center) <= radius, axis=1)
    return float(inside.mean())
