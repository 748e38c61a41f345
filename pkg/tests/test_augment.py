import numpy as np
import pytest

from prosody_features import augment as aug
from prosody_features.annot import Item
from prosody_features.config import ConfigError, build_config, get

FS = 16000
CFG = build_config({})


def _chunk_settings():
    return aug.ChunkSettings.from_cfg(get(CFG, "augment:chunk"))


def _syl_settings():
    return aug.SylSettings.from_cfg(get(CFG, "augment:syl"))


def _burst(x, center, length, f=500.0, amp=0.5):
    n = int(length * FS)
    t = np.arange(n) / FS
    i = int((center - length / 2) * FS)
    x[i:i + n] += amp * np.hanning(n) * np.sin(2 * np.pi * f * t)


def test_noise_silence_noise_two_chunks():
    rng = np.random.default_rng(0)
    x = np.concatenate([rng.normal(0, 0.3, FS), np.zeros(FS), rng.normal(0, 0.3, FS)])
    tier = aug.detect_chunks(x, FS, _chunk_settings())
    assert [it.label for it in tier.items] == ["x", "<P>", "x"]
    assert tier.items[0].t_start == 0 and tier.items[-1].t_end == 3


def test_silence_no_chunk():
    tier = aug.detect_chunks(np.zeros(FS), FS, _chunk_settings())
    assert [it.label for it in tier.items] == ["<P>"]


def test_two_bursts_two_nuclei():
    x = np.zeros(FS)
    _burst(x, 0.4, 0.12)
    _burst(x, 0.7, 0.12)
    nuc, bnd = aug.detect_syllables(x, FS, None, _syl_settings())
    assert len(nuc.items) == 2 and len(bnd.items) == 1
    assert nuc.items[0].t_start < bnd.items[0].t_start < nuc.items[1].t_start


def test_close_bursts_merge():
    x = np.zeros(FS)
    _burst(x, 0.4, 0.03)
    _burst(x, 0.43, 0.03)
    nuc, _ = aug.detect_syllables(x, FS, None, _syl_settings())
    assert len(nuc.items) == 1


def test_silence_no_nuclei():
    nuc, bnd = aug.detect_syllables(np.zeros(FS), FS, [(0.0, 1.0)], _syl_settings())
    assert nuc.items == [] and bnd.items == []


def test_build_candidates_paths_and_abs():
    feats = [{"acc": {"c": [-1.0, 2.0]}, "gnl": {"m": 3.0}},
             {"acc": {"c": [0.5, -4.0]}, "gnl": {"m": 1.0}}]
    M, names, w = aug.build_candidates(feats, {"acc": {"c": 1}, "gnl": {"m": 2}})
    assert M.shape == (2, 3)
    assert np.array_equal(M[:, :2], [[1, 2], [0.5, 4]])
    assert list(w) == [1, 1, 2]
    with pytest.raises(ConfigError):
        aug.build_candidates(feats, {"nope": 1}, where="augment:loc:wgt")


def test_delta_measure_constant_column():
    M = np.full((5, 1), 2.0)
    D, names, w = aug.apply_measure(M, ["a"], np.ones(1), "delta")
    assert np.all(D == 0)


def test_weight_features():
    rng = np.random.default_rng(0)
    a = rng.normal(size=50)
    assert np.allclose(aug.weight_features(a[:, None], "correlation"), [1])
    assert np.allclose(aug.weight_features(np.c_[a, a], "correlation"), [0.5, 0.5])
    M = np.c_[a, a, -3 * a]
    w = aug.weight_features(M, "correlation")
    assert w[2] == 0


def _blobs(rng, n=100, sep=6.0):
    X = np.r_[rng.normal(0, 1, (n, 3)), rng.normal(sep, 1, (n, 3))]
    truth = np.r_[np.zeros(n, bool), np.ones(n, bool)]
    return X, truth


def test_seed_kmeans_blobs():
    rng = np.random.default_rng(3)
    X, truth = _blobs(rng)
    res = aug.classify(X, "seed_kmeans", 90, np.array([150, 160]), np.array([10, 20]),
                       "user", None)
    assert np.mean(res.labels == truth) >= 0.95


def test_seed_prct_endpoint():
    rng = np.random.default_rng(4)
    X, _ = _blobs(rng)
    res = aug.classify(X, "seed_prct", 100, np.array([150]), np.array([10]), "user", None)
    assert not res.labels.any()


def test_fallback_without_seeds():
    rng = np.random.default_rng(5)
    X, _ = _blobs(rng)
    res = aug.classify(X, "seed_kmeans", 90, None, None, "user", None)
    assert res.method == "split" and any("falling back" in m for m in res.log)


def test_min_distance_pruning():
    keep = aug.prune_min_distance(np.array([1.0, 1.2]), np.array([True, True]),
                                  np.array([1.0, 2.0]), 0.5)
    assert keep.tolist() == [False, True]


def _cs(times, word, labels, strength):
    cs = aug.CandidateSet(0, 0, np.asarray(times), [{}] * len(times), word=np.asarray(word))
    cs.labels = np.asarray(labels, bool)
    cs.strength = np.asarray(strength, float)
    return cs


def test_acc_select_left():
    words = [Item("w", 0, 1)]
    cs = _cs([0.2, 0.5, 0.8], [0, 0, 0], [True, True, True], [1, 3, 2])
    acfg = dict(get(CFG, "augment:loc"), acc_select="left")
    tier = aug.acc_tier(cs, words, acfg, "acc")
    assert [it.t_start for it in tier.items] == [0.2]


def test_ag_select_all_one_per_word():
    words = [Item("w", 0, 1), Item("w", 1, 2), Item("w", 2, 3)]
    cs = _cs([0.3, 0.6, 2.5], [0, 0, 2], [False, False, False], [1, 2, 3])
    acfg = dict(get(CFG, "augment:loc"), ag_select="all")
    tier = aug.acc_tier(cs, words, acfg, "acc")
    assert len(tier.items) == 3
    assert [aug.word_index(np.array([it.t_start]), words)[0] for it in tier.items] == [0, 1, 2]


def test_glob_tier_regions():
    cs = _cs([1.0, 1.2, 2.0], [0, 0, 0], [True, True, True], [3, 1, 2])
    tier = aug.glob_tier(cs, [(0.5, 2.5)], 3.0, 0.5, "glob")
    spans = [(it.label, it.t_start, it.t_end) for it in tier.items]
    assert spans == [("<P>", 0, 0.5), ("x", 0.5, 1.0), ("x", 1.0, 2.0), ("x", 2.0, 2.5),
                     ("<P>", 2.5, 3.0)]


def test_boundary_seeds_from_pauses():
    class C:
        def __init__(self, a, b):
            self.seg1, self.seg2 = (a - 0.3, a), (b, b + 0.3)
    ctx = [C(1.0, 1.0), C(1.3, 1.6), C(1.7, 1.7), C(3.0, 3.0)]
    pos, neg = aug.boundary_seeds(ctx, [], 0.5)
    assert pos.tolist() == [1] and neg.tolist() == [0, 2]


def test_ort_rejects_short_words():
    cs = _cs([1, 2], [0, 0], [True, True], [1, 1])
    cs.pre_dur = np.array([0.05, 0.3])
    aug.apply_ort(cs, 0.1)
    assert cs.labels.tolist() == [False, True]
