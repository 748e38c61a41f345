import numpy as np

from prosody_features import loc
from prosody_features import register as reg


def test_normalize_segment_and_both():
    t = np.linspace(1, 3, 21)
    assert np.allclose(loc.normalize_time(t, 1, 3), np.linspace(-1, 1, 21))
    assert np.allclose(loc.normalize_time(t, 1, 3, 2.0, "both"), np.linspace(-1, 1, 21))
    tn = loc.normalize_time(np.array([0.5, 2.0]), 0, 3, 1.0, "both")
    assert np.allclose(tn, [-0.5, 0.5])


def test_fit_local_basis():
    tn = np.linspace(-1, 1, 50)
    assert np.allclose(loc.fit_local(np.zeros(50), tn, 3).c, 0)
    assert np.allclose(loc.fit_local(tn ** 2, tn, 3).c, [0, 1, 0, 0], atol=1e-9)
    assert loc.coef_dict(np.array([4.0, 3, 2, 1])) == {"c0": 1, "c1": 2, "c2": 3, "c3": 4}


def _line(t, a, b):
    return reg.stylize(a + b * t, t, 0.1, 10, 90)


def test_gestalt_identity_and_offset():
    tg = np.arange(200) * 0.01
    g = _line(tg, 5, 0)
    t = tg[50:100]
    tn = loc.normalize_time(t, t[0], t[-1])
    same = loc.gestalt(5 + 0 * t, t, tn, _line(t, 5, 0), g, 3)
    assert abs(same["ml"]["rms"]) < 1e-9 and abs(same["ml"]["sd"]) < 1e-9
    off = loc.gestalt(7 + 0 * t, t, tn, _line(t, 7, 0), g, 3)
    assert np.isclose(off["ml"]["rms"], 2) and np.isclose(off["ml"]["d_init"], 2)
    assert np.isclose(off["ml"]["d_fin"], 2) and abs(off["ml"]["sd"]) < 1e-9


def test_gestalt_slope_difference():
    tg = np.arange(200) * 0.01
    g = _line(tg, 5, 0.4)
    t = tg[50:100]
    tn = loc.normalize_time(t, t[0], t[-1])
    d = loc.gestalt(5 + t, t, tn, _line(t, 5, 1), g, 3)
    assert np.isclose(d["ml"]["sd"], 0.6)


def test_resynthesis():
    t = np.arange(100) * 0.01
    y = 3 - t
    g = reg.stylize(y, t, 0.1, 10, 90)
    idx = np.arange(100)
    out = loc.resynthesize(y, [(idx, g)], [], "ml", 100.0, True)
    assert np.allclose(out, 100 * 2 ** (g.lines["ml"].y / 12))
    # residual -> exact polynomial -> resynthesis reproduces the input
    tn = loc.normalize_time(t[20:60], t[20], t[59])
    r = y[20:60] - g.lines["ml"].y[20:60] + 0.5 * tn ** 2
    yy = y.copy()
    yy[20:60] = g.lines["ml"].y[20:60] + r
    pf = loc.fit_local(r, tn, 3)
    out = loc.resynthesize(yy, [(idx, g)], [(idx[20:60], pf, 0)], "ml", 100.0, True)
    assert np.allclose(out[20:60], 100 * 2 ** (yy[20:60] / 12), atol=1e-6)


def test_resynthesis_rng_topline():
    t = np.arange(100) * 0.01
    y = np.where(np.arange(100) % 2, 4.0, 1.0)
    g = reg.stylize(y, t, 0.1, 10, 90)
    idx = np.arange(100)
    pf = loc.PolyFit(np.array([1.0]), 0, np.ones(10), np.zeros(10))
    out = loc.resynthesize(y, [(idx, g)], [(idx[40:50], pf, 0)], "rng", 1.0, False)
    assert np.allclose(out[40:50], g.lines["tl"].y[40:50] + 1.0)
