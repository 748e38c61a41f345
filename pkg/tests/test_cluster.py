import numpy as np

from prosody_features import cluster as cl


def _blobs(seed, sep=6.0, n=60, sd=1.0):
    rng = np.random.default_rng(seed)
    X = np.r_[rng.normal(0, sd, (n, 2)), rng.normal(0, sd, (n, 2)) + [sep, 0]]
    return X, np.r_[np.zeros(n, int), np.ones(n, int)]


def _agree(a, b):
    return max(np.mean(a == b), np.mean(a != b))


def test_kmeans_blobs():
    X, truth = _blobs(0)
    r = cl.kmeans(X, 2, seed=0)
    assert _agree(r.labels, truth) == 1


def test_kmeans_single_cluster_mean():
    X, _ = _blobs(1)
    assert np.allclose(cl.kmeans(X, 1).cntr[0], X.mean(axis=0))


def test_kmeans_objective_monotone():
    X, _ = _blobs(2, sep=2)
    r = cl.kmeans(X, 4, n_init=1, seed=3)
    assert all(b <= a + 1e-9 for a, b in zip(r.inertia_history, r.inertia_history[1:]))


def test_mean_shift_identical_rows():
    r = cl.mean_shift(np.ones((20, 2)))
    assert len(r.cntr) == 1


def test_mean_shift_two_blobs():
    X, truth = _blobs(4, sep=10)
    r = cl.mean_shift(X)
    assert len(r.cntr) == 2 and _agree(r.labels, truth) == 1


def test_mean_shift_estimates_bandwidth():
    X, _ = _blobs(5)
    assert cl.estimate_bandwidth(X) > 0
    r = cl.cluster(X, {"mtd": "meanShift", "meanShift": {"bandwidth": 0}})
    assert len(r.cntr) >= 1


def test_silhouette():
    X, truth = _blobs(6, sep=20)
    assert cl.silhouette_mean(X, truth) > 0.9
    rng = np.random.default_rng(7)
    Y = rng.normal(size=(200, 2))
    assert abs(cl.silhouette_mean(Y, rng.integers(0, 2, 200))) < 0.15
    assert np.all(cl.silhouette_samples(np.array([[0.0], [1.0]]), np.array([0, 1])) == 0)


def test_kmeans_init_meanshift_dispatch():
    X, truth = _blobs(8, sep=8)
    r = cl.cluster(X, {"mtd": "kMeans", "kMeans": {"n_cluster": 2, "init": "meanShift"}})
    assert _agree(r.labels, truth) == 1
