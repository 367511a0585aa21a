import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import reference_lp_check, boundary_case, monotone_chain, polygon_signed_distance
from genhull.hull import (
    Feasibility, HullOracle, PhaseOneProblem, bbox_prefilter, phase1_feasible, point_in_hull, split_by_hull,
)


def test_problem_layout():
    X = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    p = PhaseOneProblem.from_points(X, np.array([7.0, 8.0]))
    assert p.A.shape == (3, 3)
    assert np.all(p.A[-1] == 1.0)
    assert p.b[-1] == 1.0
    assert np.all(p.c == 0)


def test_bbox_prefilter(unit_square):
    assert bbox_prefilter(unit_square, np.array([2.0, 0.5]))
    assert not bbox_prefilter(unit_square, np.array([0.5, 0.5]))
    assert not bbox_prefilter(unit_square, np.array([1.0, 1.0]))


def test_phase1_segment():
    X = np.array([[0.0], [1.0]])
    res = phase1_feasible(PhaseOneProblem.from_points(X, np.array([0.5])))
    assert res.status is Feasibility.FEASIBLE
    assert np.allclose(res.y, [0.5, 0.5])
    res = phase1_feasible(PhaseOneProblem.from_points(X, np.array([2.0])))
    assert res.status is Feasibility.INFEASIBLE


def test_phase1_vertex_indicator():
    X = np.random.default_rng(0).standard_normal((6, 3))
    res = phase1_feasible(PhaseOneProblem.from_points(X, X[4]))
    assert res.status is Feasibility.FEASIBLE
    assert np.allclose(X.T @ res.y, X[4], atol=1e-9)
    assert res.y.sum() == pytest.approx(1.0)


def test_square_examples(unit_square):
    assert point_in_hull(unit_square, np.array([0.5, 0.5]))
    assert not point_in_hull(unit_square, np.array([1.5, 0.5]))
    assert point_in_hull(unit_square, np.array([1.0, 0.5]))


def test_split_examples(unit_square):
    s = split_by_hull(unit_square, np.array([[0.5, 0.5], [2.0, 2.0]]))
    assert s.T_in == 0.5
    assert s.inside_idx.tolist() == [0] and s.outside_idx.tolist() == [1]
    assert split_by_hull(unit_square, unit_square).T_in == 1.0


def test_split_rejects_empty(unit_square):
    with pytest.raises(ValueError):
        split_by_hull(unit_square, np.empty((0, 2)))


def test_dimension_mismatch(unit_square):
    with pytest.raises(ValueError):
        point_in_hull(unit_square, np.array([0.5, 0.5, 0.5]))


def test_high_dimension_almost_never_inside():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((10, 20))
    Z = rng.standard_normal((10_000, 20))
    assert split_by_hull(X, Z).inside_idx.size <= 1


def test_point_on_low_dimensional_span_is_inside():
    # d > n: the LP is still solved, and points on the span are found
    rng = np.random.default_rng(1)
    X = rng.standard_normal((5, 30))
    w = rng.dirichlet(np.ones(5))
    assert point_in_hull(X, w @ X)
    assert not point_in_hull(X, w @ X + 1e-3 * rng.standard_normal(30))


@given(st.integers(0, 10**6))
def test_polygon_oracle_agreement(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 51))
    X = rng.standard_normal((n, 2))
    hull = monotone_chain(X)
    z = rng.uniform(-2.5, 2.5, 2)
    dist = polygon_signed_distance(hull, z)
    if abs(dist) < 1e-6:
        return
    assert point_in_hull(X, z) == (dist > 0)


@settings(max_examples=30)
@given(st.integers(0, 10**6))
def test_lp_oracle_agreement(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 11))
    n = int(rng.integers(1, 101))
    X = rng.standard_normal((n, d))
    z = rng.dirichlet(np.ones(n)) @ X if rng.random() < 0.5 else 0.7 * rng.standard_normal(d)
    if boundary_case(X, z):
        return
    assert point_in_hull(X, z) == reference_lp_check(X, z)


@settings(max_examples=40)
@given(st.integers(0, 10**6))
def test_monotone_under_added_points(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 6))
    X = rng.standard_normal((int(rng.integers(d + 1, 30)), d))
    z = rng.dirichlet(np.ones(len(X))) @ X
    assert point_in_hull(X, z)
    W = rng.standard_normal((3, d)) * 5
    assert point_in_hull(np.vstack([X, W]), z)


@settings(max_examples=40)
@given(st.integers(0, 10**6))
def test_affine_invariance(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 6))
    X = rng.standard_normal((int(rng.integers(2, 30)), d))
    z = rng.standard_normal(d)
    if boundary_case(X, z, eps=1e-4):
        return
    # well-conditioned map: orthogonal times a modest diagonal
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    M = Q @ np.diag(rng.uniform(0.5, 2.0, d))
    t = rng.standard_normal(d)
    assert point_in_hull(X, z) == point_in_hull(X @ M.T + t, M @ z + t)


def test_threaded_split_is_deterministic():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((40, 4))
    Z = rng.standard_normal((300, 4)) * 0.8
    base = split_by_hull(X, Z)
    for workers in (2, 4, 8):
        s = split_by_hull(X, Z, workers=workers)
        assert np.array_equal(s.inside_idx, base.inside_idx)
        assert np.array_equal(s.outside_idx, base.outside_idx)


@given(st.integers(1, 60), st.integers(0, 10**6))
def test_split_is_partition(m, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((8, 2))
    Z = rng.standard_normal((m, 2))
    s = split_by_hull(X, Z)
    assert s.T_in + s.T_out == 1.0
    both = np.concatenate([s.inside_idx, s.outside_idx])
    assert sorted(both.tolist()) == list(range(m))


def test_oracle_caches_are_reused():
    rng = np.random.default_rng(2)
    oracle = HullOracle(rng.standard_normal((4, 9)))
    assert oracle.U is not None
    assert oracle.A_red.shape[1] == 4
