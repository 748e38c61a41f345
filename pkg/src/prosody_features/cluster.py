"""Contour classes: k-means, flat-kernel mean shift and silhouette validation."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

logger = logging.getLogger(__name__)


@dataclass
class ClusterResult:
    c: np.ndarray
    cntr: np.ndarray
    labels: np.ndarray
    ij: list[tuple] = field(default_factory=list)
    val: float = math.nan
    inertia_history: list[float] = field(default_factory=list)


def _inertia(X: np.ndarray, cntr: np.ndarray, labels: np.ndarray) -> float:
    d = X - cntr[labels]
    return float((d * d).sum())


def _lloyd(X: np.ndarray, cntr: np.ndarray, max_iter: int, tol: float = 1e-9):
    cntr = cntr.astype(float).copy()
    history = []
    labels = np.argmin(cdist(X, cntr, "sqeuclidean"), axis=1)
    history.append(_inertia(X, cntr, labels))
    for _ in range(max_iter):
        new = cntr.copy()
        for j in range(len(cntr)):
            mem = labels == j
            if mem.any():
                new[j] = X[mem].mean(axis=0)
            else:
                # re-seed an empty cluster at the point farthest from its centroid
                far = int(np.argmax(((X - cntr[labels]) ** 2).sum(axis=1)))
                new[j] = X[far]
        labels = np.argmin(cdist(X, new, "sqeuclidean"), axis=1)
        history.append(_inertia(X, new, labels))
        shift = float(np.max(np.abs(new - cntr)))
        cntr = new
        if shift < tol:
            break
    return cntr, labels, history


def _kmeanspp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    idx = [int(rng.integers(len(X)))]
    for _ in range(1, k):
        d = cdist(X, X[idx], "sqeuclidean").min(axis=1)
        tot = d.sum()
        idx.append(int(rng.choice(len(X), p=d / tot)) if tot > 0 else int(rng.integers(len(X))))
    return X[idx].copy()


def kmeans(X: np.ndarray, n_cluster: int = 3, n_init: int = 10, max_iter: int = 300,
           init: str | np.ndarray = "random", seed: int = 0, **_) -> ClusterResult:
    """Best of ``n_init`` Lloyd runs by within-cluster sum of squares.

    ``init`` may be an explicit centroid matrix, ``"meanShift"`` (modes of a
    mean-shift run, padded with far points) or ``"random"`` (k-means++).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    k = min(int(n_cluster), len(X))
    if k < 1:
        raise ValueError("kmeans needs at least one row")
    rng = np.random.default_rng(seed)
    if isinstance(init, np.ndarray) or (isinstance(init, list) and init and
                                        not isinstance(init, str)):
        starts = [np.asarray(init, dtype=float)]
    elif init == "meanShift":
        starts = [_meanshift_init(X, k, seed)]
        starts += [_kmeanspp(X, k, rng) for _ in range(max(0, n_init - 1))]
    else:
        starts = [_kmeanspp(X, k, rng) for _ in range(max(1, n_init))]
    best = None
    for c0 in starts:
        cntr, labels, hist = _lloyd(X, c0, max_iter)
        if best is None or hist[-1] < best.inertia_history[-1] - 1e-12:
            best = ClusterResult(X, cntr, labels, inertia_history=hist)
    best.val = silhouette_mean(X, best.labels)
    return best


def _meanshift_init(X: np.ndarray, k: int, seed: int) -> np.ndarray:
    ms = mean_shift(X, seed=seed)
    sizes = np.bincount(ms.labels, minlength=len(ms.cntr))
    order = np.argsort(-sizes, kind="stable")
    cntr = list(ms.cntr[order[:k]])
    while len(cntr) < k:
        d = cdist(X, np.asarray(cntr), "sqeuclidean").min(axis=1)
        cntr.append(X[int(np.argmax(d))])
    return np.asarray(cntr, dtype=float)


def estimate_bandwidth(X: np.ndarray, quantile: float = 0.3, n_samples: int = 1000,
                       seed: int = 0) -> float:
    """Mean distance of sampled points to their k-th nearest neighbor, k = n * quantile."""
    X = np.asarray(X, dtype=float)
    n = len(X)
    if n < 2:
        return 0.0
    rng = np.random.default_rng(seed)
    rows = X[rng.permutation(n)[:n_samples]] if n_samples and n > n_samples else X
    k = max(1, int(n * quantile))
    k = min(k, n - 1)
    d = np.sort(cdist(rows, X), axis=1)
    return float(d[:, k].mean())


def _bin_seeds(X: np.ndarray, bw: float, min_bin_freq: int) -> np.ndarray:
    bins, counts = np.unique(np.round(X / bw), axis=0, return_counts=True)
    seeds = bins[counts >= min_bin_freq] * bw
    return seeds if len(seeds) else X.copy()


def mean_shift(X: np.ndarray, bandwidth: float = 0, bin_seeding: bool = False,
               min_bin_freq: int = 1, quantile: float = 0.3, n_samples: int = 1000,
               seed: int = 0, max_iter: int = 300, **_) -> ClusterResult:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    bw = float(bandwidth) if bandwidth else estimate_bandwidth(X, quantile, n_samples, seed)
    if bw <= 0:
        cntr = X.mean(axis=0, keepdims=True)
        res = ClusterResult(X, cntr, np.zeros(len(X), dtype=int))
        return res
    seeds = _bin_seeds(X, bw, min_bin_freq) if bin_seeding else X.copy()
    modes, weights = [], []
    for s in seeds:
        m = s.copy()
        for _ in range(max_iter):
            inside = np.sum((X - m) ** 2, axis=1) <= bw * bw
            if not inside.any():
                break
            new = X[inside].mean(axis=0)
            if np.sum((new - m) ** 2) < (1e-3 * bw) ** 2:
                m = new
                break
            m = new
        inside = np.sum((X - m) ** 2, axis=1) <= bw * bw
        if inside.any():
            modes.append(m)
            weights.append(int(inside.sum()))
    if not modes:
        modes, weights = [X.mean(axis=0)], [len(X)]
    modes = np.asarray(modes)
    order = np.argsort(-np.asarray(weights), kind="stable")
    kept: list[np.ndarray] = []
    for i in order:
        if all(np.sum((modes[i] - c) ** 2) > bw * bw for c in kept):
            kept.append(modes[i])
    cntr = np.asarray(kept)
    labels = np.argmin(cdist(X, cntr, "sqeuclidean"), axis=1)
    # drop modes that attracted no points after nearest assignment
    used = np.unique(labels)
    cntr = cntr[used]
    labels = np.searchsorted(used, labels)
    return ClusterResult(X, cntr, labels, val=silhouette_mean(X, labels))


def silhouette_samples(X: np.ndarray, labels: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    if len(uniq) < 2:
        return np.full(len(X), np.nan)
    D = cdist(X, X)
    s = np.zeros(len(X))
    for i in range(len(X)):
        own = labels == labels[i]
        n_own = own.sum()
        if n_own <= 1:
            s[i] = 0.0
            continue
        a = D[i, own].sum() / (n_own - 1)
        b = min(D[i, labels == u].mean() for u in uniq if u != labels[i])
        den = max(a, b)
        s[i] = (b - a) / den if den > 0 else 0.0
    return s


def silhouette_mean(X: np.ndarray, labels: np.ndarray) -> float:
    s = silhouette_samples(X, labels)
    return float(np.mean(s)) if np.all(np.isfinite(s)) and len(s) else math.nan


def cluster(X: np.ndarray, spec: dict, seed: int = 0) -> ClusterResult:
    """Dispatch on ``spec['mtd']`` using the option branches of a clst config."""
    X = np.asarray(X, dtype=float)
    eb = spec.get("estimate_bandwidth", {})
    ms_opts = dict(spec.get("meanShift", {}))
    ms_opts.update(quantile=eb.get("quantile", 0.3), n_samples=eb.get("n_samples", 1000))
    if len(X) == 1:
        return ClusterResult(X, X.copy(), np.zeros(1, dtype=int))
    if spec.get("mtd", "meanShift") == "meanShift":
        return mean_shift(X, seed=seed, **ms_opts)
    km = dict(spec.get("kMeans", {}))
    init = km.pop("init", "meanShift")
    if init == "meanShift":
        ms = mean_shift(X, seed=seed, **ms_opts)
        k = int(km.get("n_cluster", 3))
        sizes = np.bincount(ms.labels, minlength=len(ms.cntr))
        c0 = list(ms.cntr[np.argsort(-sizes, kind="stable")[:k]])
        while len(c0) < min(k, len(X)):
            d = cdist(X, np.asarray(c0), "sqeuclidean").min(axis=1)
            c0.append(X[int(np.argmax(d))])
        init = np.asarray(c0)
        km["n_cluster"] = len(init)
    return kmeans(X, init=init, seed=seed, **km)
