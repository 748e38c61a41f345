import math

import numpy as np

from prosody_features import gnl


def test_standard_stats_normalized():
    s = gnl.standard_stats(np.full(30, 5.0), np.full(60, 5.0))
    assert s["m"] == 5 and s["m_nrm"] == 1 and s["sd"] == 0
    y = np.random.default_rng(0).normal(3, 1, 40)
    s = gnl.standard_stats(y, y, dur=0.4, dur_nrm_ctx=0.4)
    assert all(math.isclose(s[k], 1) for k in s if k.endswith("_nrm"))
    assert gnl.standard_stats(np.full(5, 2.0), np.full(5, 4.0))["m_nrm"] == 0.5


def test_part_quotients():
    q = gnl.part_quotients(np.full(100, 3.0))
    assert all(math.isclose(q[k], 1) for k in ("qi", "qf", "qb", "qm"))
    y = np.ones(100)
    y[:30] = 2
    assert math.isclose(gnl.part_quotients(y)["qi"], 2)


def test_shape_poly():
    t = np.linspace(0, 1, 50)
    c = gnl.shape_poly(t ** 2)
    assert np.allclose([c["c2"], c["c1"], c["c0"]], [1, 0, 0], atol=1e-9)
    c = gnl.shape_poly(np.full(10, 4.0))
    assert np.allclose([c["c2"], c["c1"], c["c0"]], [0, 0, 4], atol=1e-9)
    assert gnl.shape_poly(t)["c1"] > 0


def test_spectral_balance():
    fs = 16000
    x = np.sin(2 * np.pi * 100 * np.arange(fs) / fs)
    assert gnl.spectral_balance(x, fs, gnl.SpectralBalanceSpec(alpha=0)) == 0
    assert gnl.spectral_balance(x, fs, gnl.SpectralBalanceSpec(alpha=0.95)) < 0
    assert math.isclose(gnl.pre_emphasis_factor(150, 16000), 0.943, abs_tol=1e-3)


def test_file_level_matches_segment():
    y = np.random.default_rng(1).normal(size=80)
    f = gnl.file_level(y)
    assert math.isclose(f["m"], gnl.standard_stats(y)["m"])
    assert math.isclose(f["qi"], gnl.part_quotients(y)["qi"])
