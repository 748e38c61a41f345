import math

import numpy as np

from prosody_features import rhy
from prosody_features.annot import Item

T = np.arange(200) / 100


def test_cosine_concentration():
    r = rhy.rhythm_spectrum(np.cos(2 * np.pi * 4 * T), 100, rhy.RhythmSpec())
    assert abs(r.f_max - 4) <= 0.5
    assert abs(r.sm[0] - 4) < 1.0


def test_constant_with_rmo_is_missing():
    r = rhy.rhythm_spectrum(np.full(200, 3.0), 100, rhy.RhythmSpec(rmo=True, winparam=0))
    assert all(math.isnan(v) for v in r.sm)


def test_event_rate():
    ev = [Item("x", t, t) for t in (0.2, 0.7, 1.1, 1.9)]
    assert rhy.event_rate(ev, 0, 2) == 2.0
    assert rhy.event_rate([Item("s", 1.5, 2.5)], 0, 2) == 0.25
    assert rhy.event_rate([], 0, 2) == 0


def test_rate_influence_pure_cosine():
    # cosine on the DCT basis at 4 Hz: no leakage, the band holds all mass
    n = np.arange(200)
    y = np.cos(np.pi * 16 * (2 * n + 1) / 400)
    r = rhy.rhythm_spectrum(y, 100, rhy.RhythmSpec(winparam=0))
    d = rhy.rate_influence(r, 4.0, 1.0)
    assert d["prop"] > 0.999 and d["mae"] < 1e-9
    d = rhy.rate_influence(r, r.f_max, 1.0)
    assert d["dgm"] == 0


def test_noise_prop_near_flat():
    rng = np.random.default_rng(0)
    props = []
    for _ in range(20):
        r = rhy.rhythm_spectrum(rng.normal(size=400), 100, rhy.RhythmSpec(winparam=0))
        props.append(rhy.rate_influence(r, 5.0, 0.5)["prop"])
    expect = 2 * 0.5 / 10
    assert 0.5 * expect < np.mean(props) < 1.5 * expect


def test_two_peak_mean():
    y = np.cos(2 * np.pi * 3 * T) + np.cos(2 * np.pi * 5 * T)
    r = rhy.rhythm_spectrum(y, 100, rhy.RhythmSpec(winparam=0))
    assert abs(r.sm[0] - 4) < 0.3
