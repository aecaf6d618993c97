import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.metrics import adjusted_rand_score

from adaptviv.characterize import FeatureVector
from adaptviv.clustering import (
    ClusterModel,
    ClusteringError,
    ScalerParams,
    adjusted_rand_index,
    apply_scaler,
    classify,
    fit,
    fit_scaler,
    gmm_fit,
    kmeans,
    lloyd,
    log_likelihood,
    posterior,
    spectral,
)
from builders import three_group_features, planted_blobs


def test_scaler_basics():
    assert np.array_equal(apply_scaler(fit_scaler([[3.0, 4.0]]), [[3.0, 4.0]]), [[0.0, 0.0]])
    x = np.array([[0.0], [5.0], [10.0]])
    assert np.allclose(apply_scaler(fit_scaler(x), x).ravel(), [0, 0.5, 1])
    with pytest.raises(ClusteringError):
        fit_scaler([])


def test_scaler_accepts_feature_vectors():
    data = [FeatureVector(3, 0.1, 0.2), FeatureVector(9, 0.3, 0.6)]
    assert np.array_equal(apply_scaler(fit_scaler(data), data), [[0, 0, 0], [1, 1, 1]])


@settings(max_examples=40)
@given(st.lists(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3), min_size=1, max_size=30))
def test_scaled_training_data_in_unit_cube(rows):
    scaled = apply_scaler(fit_scaler(rows), rows)
    assert np.all((scaled >= 0) & (scaled <= 1))


@pytest.mark.parametrize("seed", range(5))
def test_ari_agrees_with_reference(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.integers(0, 4, 50), rng.integers(0, 3, 50)
    assert adjusted_rand_index(a, b) == pytest.approx(adjusted_rand_score(a, b), abs=1e-12)
    assert adjusted_rand_index(a, (a + 1) % 4) == pytest.approx(1.0)


def test_kmeans_pairs_and_singletons():
    x = np.array([[0.0, 0.0], [0.01, 0.0], [1.0, 1.0], [1.0, 0.99]])
    m = kmeans(x, 2, seed=0)
    assert adjusted_rand_index(m.labels, [0, 0, 1, 1]) == 1.0
    m4 = kmeans(x, 4, seed=0)
    assert len(set(m4.labels)) == 4
    with pytest.raises(ClusteringError):
        kmeans(x, 5)


def test_lloyd_inertia_non_increasing():
    x, _ = planted_blobs(1, std=0.2)
    hist = []
    lloyd(x, 3, np.random.default_rng(0), inertia_history=hist)
    assert np.all(np.diff(hist) <= 1e-12)


@pytest.mark.parametrize("algo", ["kmeans", "gmm", "spectral"])
def test_planted_recovery(algo):
    x, labels = planted_blobs(0, std=0.02)
    assert adjusted_rand_index(fit(x, algo, 3, seed=0).labels, labels) >= 0.95


def test_fits_are_reproducible():
    x, _ = planted_blobs(2, std=0.1)
    for algo in ("kmeans", "gmm", "spectral"):
        assert np.array_equal(fit(x, algo, 3, seed=5).labels, fit(x, algo, 3, seed=5).labels)


def test_single_gaussian_moments():
    rng = np.random.default_rng(4)
    x = rng.multivariate_normal([1, 2, 3], [[1, 0.3, 0], [0.3, 2, 0.1], [0, 0.1, 0.5]], size=400)
    m = gmm_fit(x, 1)
    xs = m.scaler.transform(x)
    assert np.allclose(m.means[0], xs.mean(axis=0), atol=1e-6)
    cov = np.cov(xs.T, bias=True) + 1e-6 * np.eye(3)
    assert np.allclose(m.covariances[0], cov, atol=1e-6)


def test_gmm_invariants_and_history():
    x, _ = planted_blobs(3, std=0.05)
    m = gmm_fit(x, 3, seed=1)
    assert m.weights.size == 3
    assert m.weights.sum() == pytest.approx(1.0, abs=1e-9)
    for c in m.covariances:
        assert np.allclose(c, c.T) and np.linalg.eigvalsh(c).min() >= 1e-8
    assert np.all(np.diff(m.log_likelihood_history) >= -1e-9)
    assert log_likelihood(m, x) == pytest.approx(m.log_likelihood_history[-1], rel=1e-9)


def test_gmm_too_few_points():
    with pytest.raises(ClusteringError):
        gmm_fit(np.random.default_rng(0).random((8, 3)), 3)


def test_spectral_two_blobs_and_k1():
    x, labels = planted_blobs(0, n=60, means=np.array([[0.1, 0.1, 0.1], [0.9, 0.9, 0.9]]))
    assert adjusted_rand_index(spectral(x, 2).labels, labels) == 1.0
    assert np.all(spectral(x, 1).labels == 0)


def test_spectral_disconnected_graph_errors():
    # a tight crowd sets a tiny bandwidth, leaving three far points isolated
    crowd = 1e-6 * np.random.default_rng(0).standard_normal((50, 2))
    x = np.vstack([crowd, [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]])
    with pytest.raises(ClusteringError, match="components"):
        spectral(x, 2)


def test_unknown_algorithm():
    with pytest.raises(ValueError):
        fit(np.eye(3), "dbscan", 2)


def test_classify_component_mean():
    x, _ = planted_blobs(0)
    m = gmm_fit(x, 3, seed=0)
    for j in range(3):
        raw = m.scaler.x_min + m.means[j] * (m.scaler.x_max - m.scaler.x_min)
        label, post = classify(m, raw)
        assert label == j and post[j] > 0.99
        assert post.sum() == pytest.approx(1.0, abs=1e-9)


def test_classify_symmetric_point():
    m = ClusterModel(
        "gmm", 2, ScalerParams(np.zeros(2), np.ones(2)), np.array([0, 1]), 0,
        weights=np.array([0.5, 0.5]), means=np.array([[0.2, 0.5], [0.8, 0.5]]),
        covariances=np.array([np.eye(2) * 0.01] * 2),
    )
    _, post = classify(m, [0.5, 0.5])
    assert np.allclose(post, 0.5, atol=1e-6)
    m.weights = m.weights * 7.0
    assert classify(m, [0.3, 0.5])[0] == 0


def test_classify_needs_gmm():
    x, _ = planted_blobs(0)
    with pytest.raises(ClusteringError):
        posterior(kmeans(x, 3), x[:1])


def test_model_round_trip():
    x, _ = planted_blobs(0)
    m = gmm_fit(x, 3)
    back = ClusterModel.from_dict(m.to_dict())
    assert np.allclose(posterior(back, x), posterior(m, x))


def test_bending_point_joins_bending_group():
    x, labels = three_group_features()
    m = gmm_fit(x, 3, seed=0)
    bending = np.bincount(m.labels[labels == 1]).argmax()
    label, _ = classify(m, [25.0, 0.1, 0.6])
    assert label == bending
