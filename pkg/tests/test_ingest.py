import hashlib
import io
import json
import warnings
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from genhull.ingest import (
    DataError, Dataset, FetchError, fetch_openml, from_arrays, load_openml, load_table, published_shape,
    standardize, stratified_kfold, validate,
)

DATA = Path(__file__).parent / "data"


def test_csv_three_lines():
    ds = load_table(io.StringIO("a,b,t\n1,2,x\n3,4,y"), target_column="t")
    assert (ds.n, ds.d, ds.c) == (2, 2, 2)
    assert ds.feature_names == ["a", "b"]
    assert ds.X.tolist() == [[1.0, 2.0], [3.0, 4.0]]


def test_csv_target_by_index_and_bytes():
    ds = load_table(b"t,a\nx,1\ny,2\n", target_column=0)
    assert ds.feature_names == ["a"]
    assert ds.y.tolist() == ["x", "y"]


def test_csv_textual_feature_named():
    with pytest.raises(DataError, match="'b'.*line 3"):
        load_table(io.StringIO("a,b,t\n1,2,x\n3,oops,y"), target_column="t")


def test_csv_missing_target():
    with pytest.raises(DataError, match="not found"):
        load_table(io.StringIO("a,b\n1,2\n"), target_column="t")


def test_csv_ragged_row():
    with pytest.raises(DataError, match="line 2"):
        load_table(io.StringIO("a,b,t\n1,2\n"), target_column="t")


def test_arff_fixture():
    ds = load_table(DATA / "tiny_iris.arff", format="arff")
    assert (ds.d, ds.c, ds.n) == (4, 3, 6)
    assert ds.feature_names[3] == "petal width"
    assert ds.X[2, 2] == 4.7


def test_arff_string_attribute_rejected():
    text = "@relation r\n@attribute a string\n@attribute c {p,q}\n@data\nfoo,p\n"
    with pytest.raises(DataError, match="non-numeric"):
        load_table(io.StringIO(text), format="arff")


def test_validate_nan_location():
    X = np.array([[1.0, 2.0], [3.0, np.nan], [5.0, 6.0], [7.0, 8.0]])
    with pytest.raises(DataError, match=r"row 1, column 1"):
        validate(Dataset("d", X, np.array(["a", "a", "b", "b"]), ["u", "v"], ["a", "b"]))


def test_validate_single_class():
    with pytest.raises(DataError, match="c = 1 < 2"):
        from_arrays(np.ones((3, 1)), ["a", "a", "a"])


def test_validate_singleton_class():
    with pytest.raises(DataError, match="fewer than 2"):
        from_arrays(np.arange(3.0)[:, None], ["a", "a", "b"])


def test_validate_identity_and_encoding():
    X = np.random.default_rng(0).standard_normal((6, 2))
    ds = from_arrays(X, ["virginica", "setosa", "setosa", "virginica", "versicolor", "versicolor"])
    assert np.array_equal(ds.X, X)
    assert ds.y.tolist() == [0, 1, 1, 0, 2, 2]
    assert ds.class_labels == ["virginica", "setosa", "versicolor"]
    again = validate(ds)
    assert np.array_equal(again.y, ds.y)


def test_standardize_two_points():
    ds = from_arrays([[1.0], [3.0], [1.0], [3.0]], [0, 0, 1, 1])
    out, stats = standardize(ds)
    assert out.X[:, 0].tolist() == [-1.0, 1.0, -1.0, 1.0]
    assert stats.mean[0] == 2.0 and stats.std[0] == 1.0


def test_standardize_constant_column():
    ds = from_arrays([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0], [5.0, 4.0]], [0, 1, 0, 1])
    out, stats = standardize(ds)
    assert out.X[:, 0].tolist() == [0.0] * 4
    assert stats.constant.tolist() == [True, False]


def test_standardize_applies_given_stats():
    rng = np.random.default_rng(1)
    train = from_arrays(rng.standard_normal((20, 3)) * 3 + 1, [0, 1] * 10)
    test = from_arrays(rng.standard_normal((4, 3)), [0, 1, 0, 1])
    _, stats = standardize(train)
    out, same = standardize(test, stats)
    assert same is stats
    assert np.array_equal(out.X, (test.X - stats.mean) / stats.std)
    with pytest.raises(DataError):
        standardize(from_arrays(np.ones((4, 2)) * [[1], [2], [3], [4]], [0, 1, 0, 1]), stats)


@given(st.integers(0, 10**6), st.integers(4, 40), st.integers(1, 6))
def test_standardize_round_trip(seed, n, d):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d)) * rng.uniform(0.01, 100, d) + rng.uniform(-50, 50, d)
    ds = from_arrays(X, np.arange(n) % 2)
    out, stats = standardize(ds)
    back = stats.inverse_transform(out.X)
    assert np.all(np.abs(back - X) <= 1e-12 * np.maximum(1.0, np.abs(X)))


def test_kfold_exact_strata():
    ds = from_arrays(np.zeros((100, 1)), [0] * 70 + [1] * 30)
    folds = stratified_kfold(ds, 10, seed=3)
    for f in folds:
        counts = np.bincount(ds.y[f.test_idx], minlength=2)
        assert counts.tolist() == [7, 3]


def test_kfold_deterministic():
    ds = from_arrays(np.zeros((50, 1)), np.arange(50) % 3)
    a = stratified_kfold(ds, 5, seed=9)
    b = stratified_kfold(ds, 5, seed=9)
    assert all(np.array_equal(x.test_idx, y.test_idx) for x, y in zip(a, b))


@given(st.integers(0, 10**6), st.integers(2, 12))
def test_kfold_partition_and_balance(seed, k):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(max(k, 6), 200))
    y = rng.integers(0, 4, n)
    y[:2] = 0
    ds = Dataset("p", np.zeros((n, 1)), y, ["x"], sorted(set(y.tolist())), encoded=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        folds = stratified_kfold(ds, k, seed)
    seen = np.concatenate([f.test_idx for f in folds])
    assert sorted(seen.tolist()) == list(range(n))
    for f in folds:
        assert np.intersect1d(f.train_idx, f.test_idx).size == 0
        assert f.train_idx.size + f.test_idx.size == n
        for cls in np.unique(y):
            share = np.sum(y == cls) / k
            assert abs(np.sum(y[f.test_idx] == cls) - share) < 1.0


def test_kfold_small_class_warns():
    ds = from_arrays(np.zeros((20, 1)), [0] * 17 + [1] * 3)
    with pytest.warns(UserWarning, match="< k=5"):
        stratified_kfold(ds, 5)


def test_kfold_k_exceeds_n():
    ds = from_arrays(np.zeros((4, 1)), [0, 0, 1, 1])
    with pytest.raises(DataError, match="exceeds"):
        stratified_kfold(ds, 5)


# --------------------------------------------------------------------------- OpenML client with a fake transport

ARFF = (DATA / "tiny_iris.arff").read_bytes()


class _Resp:
    def __init__(self, status, payload=None, content=b""):
        self.status_code = status
        self._payload = payload
        self.content = content

    def json(self):
        return self._payload


class FakeSession:
    def __init__(self, status=200, body=ARFF, md5=None):
        self.calls = []
        self.status = status
        self.body = body
        self.md5 = md5 if md5 is not None else hashlib.md5(body).hexdigest()

    def get(self, url, timeout=None):
        self.calls.append(url)
        if self.status != 200:
            return _Resp(self.status, {"error": {"code": "111"}})
        if "/data/qualities/" in url:
            q = [{"name": "NumberOfInstances", "value": "6.0"}, {"name": "NumberOfFeatures", "value": "5.0"}]
            return _Resp(200, {"data_qualities": {"quality": q}})
        if "/data/" in url and "download" not in url:
            return _Resp(200, {"data_set_description": {
                "id": "99", "name": "tiny", "url": "https://example.invalid/download/99",
                "md5_checksum": self.md5, "default_target_attribute": "class"}})
        return _Resp(200, content=self.body)


def test_fetch_then_warm_cache(tmp_path):
    s = FakeSession()
    path = fetch_openml(99, tmp_path, session=s)
    assert path.read_bytes() == ARFF
    assert len(s.calls) == 3
    again = FakeSession()
    assert fetch_openml(99, tmp_path, session=again) == path
    assert again.calls == []


def test_fetched_shape_matches_metadata(tmp_path):
    ds = load_openml(99, tmp_path, session=FakeSession())
    assert published_shape(99, tmp_path) == (ds.n, ds.d)
    assert ds.id == "openml-99"


def test_unknown_id_carries_status(tmp_path):
    with pytest.raises(FetchError) as err:
        fetch_openml(123456789, tmp_path, session=FakeSession(status=412))
    assert err.value.status == 412


def test_download_checksum_mismatch(tmp_path):
    with pytest.raises(FetchError, match="MD5"):
        fetch_openml(99, tmp_path, session=FakeSession(md5="0" * 32))


def test_cached_file_corruption_detected(tmp_path):
    path = fetch_openml(99, tmp_path, session=FakeSession())
    path.write_bytes(ARFF + b"5.0,3.0,1.0,0.1,Iris-setosa\n")
    with pytest.raises(FetchError, match="MD5"):
        fetch_openml(99, tmp_path, session=FakeSession())


def test_cache_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("GENHULL_CACHE", str(tmp_path / "c"))
    path = fetch_openml(99, session=FakeSession())
    assert path.parent == tmp_path / "c" / "99"
    assert json.loads((path.parent / "description.json").read_text())["name"] == "tiny"
