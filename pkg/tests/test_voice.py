import math

import numpy as np

from prosody_features import voice


def test_periods():
    p = np.arange(0, 0.2, 0.01)
    s = voice.periods(p)
    assert np.allclose(s.periods, 0.01)
    gap = np.array([0, 0.01, 0.02, 0.07, 0.08])
    assert len(voice.periods(gap).periods) == 3
    s = voice.periods(np.array([0, 0.010, 0.024]))
    assert len(s.pairs) == 0


def test_jitter():
    assert voice.jitter(voice.periods(np.arange(0, 0.2, 0.01))) < 1e-12
    p = np.cumsum([0] + [0.009, 0.011] * 20)
    assert abs(voice.jitter(voice.periods(p)) - 0.2) < 1e-9


def test_shimmer_alternating():
    p = np.arange(41) * 0.01
    s = voice.periods(p)
    amps = np.where(np.arange(len(s.periods)) % 2, 1.1, 0.9)
    assert abs(voice.shimmer(amps, s) - 0.2) < 1e-6
    assert voice.shimmer(np.ones(len(s.periods)), s) == 0


def test_shimmer_linear():
    p = np.arange(11) * 0.01
    s = voice.periods(p)
    a = 1 + 0.1 * np.arange(10)
    assert math.isclose(voice.shimmer(a, s), 0.1 / a.mean())


def test_time_course():
    t = np.linspace(0, 1, 20)
    c = voice.time_course(np.full(20, 0.3), t, "jit")
    assert np.allclose([c["jit_c3"], c["jit_c2"], c["jit_c1"]], 0, atol=1e-12)
    assert math.isclose(c["jit_c0"], 0.3)
    assert voice.time_course(1 - t, t, "jit")["jit_c1"] < 0
    tn = 2 * t - 1
    assert math.isclose(voice.time_course(tn ** 3, t, "jit")["jit_c3"], 1, abs_tol=1e-9)
