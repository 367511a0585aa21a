import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from genhull.numerics import (
    SymmetricMatrix, covariance_eigenvalues, erf_family, f_cdf, f_sf, jacobi_eigen, reg_inc_beta, sym_eigen,
)


def test_erf_at_zero():
    assert erf_family(0.0) == (0.0, 1.0)


def test_erf_one_against_mpmath():
    oracle = float(mpmath.erf(1))
    assert oracle == pytest.approx(0.842700793, abs=1e-9)
    assert erf_family(1.0)[0] == pytest.approx(oracle, abs=1e-12)


@given(st.floats(-6, 6, allow_nan=False))
def test_erf_matches_high_precision_series(x):
    e, c = erf_family(x)
    assert abs(e - float(mpmath.erf(x))) <= 1e-12
    assert c == 1.0 - e
    assert abs(e) <= 1.0


@given(st.floats(0, 8, allow_nan=False))
def test_erf_odd(x):
    assert erf_family(-x)[0] == -erf_family(x)[0]


def test_erf_monotone_on_grid():
    x = np.linspace(-5, 5, 2001)
    e, c = erf_family(x)
    # strictly increasing until it saturates at +-1 in double precision
    core = np.abs(x) < 5.5
    assert np.all(np.diff(e[core]) >= 0)
    assert np.all(np.diff(e[np.abs(x) < 3]) > 0)
    assert np.all(np.diff(c[np.abs(x) < 3]) < 0)


@pytest.mark.parametrize("x", [0.0, 0.3, 1.0])
def test_inc_beta_uniform_case(x):
    assert reg_inc_beta(1, 1, x) == pytest.approx(x, abs=1e-14)


@pytest.mark.parametrize("a", [1.0, 2.5])
def test_inc_beta_symmetric_midpoint(a):
    assert reg_inc_beta(a, a, 0.5) == pytest.approx(0.5, abs=1e-14)


# dyadic x keeps 1 - x exact, so the identity is not polluted by input rounding
@given(st.floats(0.1, 50), st.floats(0.1, 50), st.integers(0, 2**20).map(lambda k: k / 2**20))
def test_inc_beta_reflection(a, b, x):
    assert reg_inc_beta(a, b, x) + reg_inc_beta(b, a, 1 - x) == pytest.approx(1.0, abs=1e-12)


@given(st.floats(0.2, 30), st.floats(0.2, 30), st.floats(0.001, 0.999))
def test_inc_beta_against_mpmath(a, b, x):
    oracle = float(mpmath.betainc(a, b, 0, x, regularized=True))
    assert reg_inc_beta(a, b, x) == pytest.approx(oracle, abs=1e-11)


def test_inc_beta_monotone():
    xs = np.linspace(0, 1, 201)
    vals = [reg_inc_beta(2.0, 5.0, x) for x in xs]
    assert np.all(np.diff(vals) >= 0)
    assert 0.0 <= min(vals) and max(vals) <= 1.0


@pytest.mark.parametrize("a,b,x", [(0, 1, 0.5), (1, -1, 0.5), (1, 1, 1.5)])
def test_inc_beta_domain(a, b, x):
    with pytest.raises(ValueError):
        reg_inc_beta(a, b, x)


def test_f_cdf_monte_carlo():
    rng = np.random.default_rng(12345)
    d1 = d2 = 10
    f = (rng.chisquare(d1, 10**6) / d1) / (rng.chisquare(d2, 10**6) / d2)
    empirical = float(np.mean(f <= 1.0))
    assert f_cdf(1.0, d1, d2) == pytest.approx(empirical, abs=0.01)
    assert f_cdf(1.0, d1, d2) + f_sf(1.0, d1, d2) == pytest.approx(1.0, abs=1e-14)


def test_eigen_identity():
    w, v = sym_eigen(np.eye(3))
    assert np.allclose(w, 1.0)
    assert np.allclose(v.T @ v, np.eye(3), atol=1e-12)


def test_eigen_diagonal():
    w, v = sym_eigen(np.diag([1.0, 3.0]))
    assert np.allclose(w, [3.0, 1.0])
    assert np.allclose(np.abs(v), [[0, 1], [1, 0]])


@pytest.mark.parametrize("method", ["jacobi", "lapack"])
@pytest.mark.parametrize("seed", range(5))
def test_eigen_reconstruction(method, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((8, 8))
    s = a + a.T
    w, v = sym_eigen(s, method=method)
    norm = np.linalg.norm(s)
    assert np.linalg.norm(v @ np.diag(w) @ v.T - s) <= 1e-9
    assert np.linalg.norm(v.T @ v - np.eye(8)) <= 1e-10
    for i in range(8):
        assert np.linalg.norm(s @ v[:, i] - w[i] * v[:, i]) <= 1e-10 * norm
    assert np.all(np.diff(w) <= 0)
    assert w.sum() == pytest.approx(np.trace(s), rel=1e-10, abs=1e-12)


@given(st.integers(2, 12), st.integers(0, 10_000))
def test_jacobi_agrees_with_lapack(m, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((m, m))
    s = a @ a.T
    wj, _ = jacobi_eigen(s)
    assert np.allclose(np.sort(wj), np.linalg.eigvalsh(s), atol=1e-9 * max(1.0, np.abs(s).max()))


def test_non_symmetric_rejected():
    with pytest.raises(ValueError):
        SymmetricMatrix(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_gram_trick_matches_covariance():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((6, 40))
    w = covariance_eigenvalues(x)
    direct = np.sort(np.linalg.eigvalsh(np.cov(x.T)))[::-1]
    assert np.allclose(w, np.clip(direct, 0, None), atol=1e-10)
