import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from odsandbox.datagen import ConfigError
from odsandbox.iforest import IForestConfig, IsolationForest, average_path_length, harmonic, iforest_score
from odsandbox.lof import LofConfig, lof_score
from odsandbox.neighbors import KnnIndex


def test_knn_excludes_self_and_matches_scan():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(50, 3))
    idx, dist = KnnIndex(X, max_k=7).query(7)
    for i in range(50):
        d = np.linalg.norm(X - X[i], axis=1)
        d[i] = np.inf
        want = np.argsort(d, kind="stable")[:7]
        assert i not in idx[i]
        np.testing.assert_array_equal(idx[i], want)
        np.testing.assert_allclose(dist[i], d[want])


def test_knn_collinear():
    idx, _ = KnnIndex(np.array([[0.0], [1.0], [3.0]]), max_k=1).query(1)
    assert idx[1, 0] == 0


def test_lof_uniform_line_interior():
    X = np.arange(10.0)[:, None]
    assert lof_score(X, LofConfig(k=2))[5] == pytest.approx(1.0)


def test_lof_k_out_of_range():
    with pytest.raises(ConfigError):
        lof_score(np.zeros((5, 1)), LofConfig(k=5))


def test_lof_duplicates_warn():
    X = np.zeros((6, 2))
    with pytest.warns(RuntimeWarning):
        s = lof_score(X, LofConfig(k=2))
    assert np.all(np.isfinite(s))


@given(st.floats(0.01, 100), st.integers(0, 10_000))
@settings(max_examples=20, deadline=None)
def test_lof_scale_invariant(scale, seed):
    X = np.random.default_rng(seed).normal(size=(40, 3))
    np.testing.assert_allclose(lof_score(X * scale, LofConfig(5)), lof_score(X, LofConfig(5)), atol=1e-9)


def test_harmonic_and_c():
    assert harmonic(1) == pytest.approx(1.0)
    assert harmonic(4) == pytest.approx(25 / 12)
    assert average_path_length(2) == 1.0
    assert average_path_length(3) == pytest.approx(2 * 1.5 - 4 / 3)
    assert average_path_length(1) == 0.0 and average_path_length(0) == 0.0


def test_far_point_is_isolated():
    wins = 0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        X = np.r_[rng.normal(size=(255, 1)), [[100.0]]]
        s = iforest_score(X, IForestConfig(seed=seed))
        wins += s[-1] > np.quantile(s[:-1], 0.99)
    assert wins >= 9


def test_iforest_deterministic_and_bounded():
    X = np.random.default_rng(1).normal(size=(300, 4))
    a = iforest_score(X, IForestConfig(seed=5))
    b = iforest_score(X, IForestConfig(seed=5))
    np.testing.assert_array_equal(a, b)
    assert np.all((a > 0) & (a < 1))
    assert not np.array_equal(a, iforest_score(X, IForestConfig(seed=6)))


def test_iforest_score_monotone_in_path_length():
    X = np.random.default_rng(2).normal(size=(200, 2))
    forest = IsolationForest(IForestConfig(seed=3)).fit(X)
    paths = forest.mean_path_length(X)
    scores = forest.score(X)
    order = np.argsort(paths)
    assert np.all(np.diff(scores[order]) <= 0)


def test_iforest_small_sample_and_bad_config():
    X = np.random.default_rng(3).normal(size=(20, 2))
    assert iforest_score(X, IForestConfig(subsample=256, seed=0)).shape == (20,)
    with pytest.raises(ConfigError):
        iforest_score(X, IForestConfig(n_trees=0))
