import numpy as np

from prosody_features import register as reg

T = np.arange(100) * 0.01


def _fit(y, t=T):
    return reg.stylize(y, t, 0.1, 10, 90)


def test_constant_contour():
    f = _fit(np.full(100, 5.0))
    for k in ("bl", "ml", "tl"):
        assert np.allclose(f.lines[k].y, 5)
        assert abs(f.lines[k].rate) < 1e-12
    assert abs(f.lines["rng"].rate) < 1e-12 and not f.err


def test_ramp_medians_on_ramp():
    y = 2 + 3 * T
    seq = reg.median_sequences(y, T, 0.1)
    assert np.allclose(seq.ml, 2 + 3 * seq.t, atol=0.1 * 3 / 2)


def test_parallel_band():
    rng = np.random.default_rng(0)
    y = 10 - 4 * T + rng.uniform(-1, 1, len(T))
    f = _fit(y)
    assert abs(f.lines["bl"].rate - f.lines["tl"].rate) < 1.0
    assert abs(f.lines["rng"].rate) < 1.0


def test_crossing_sets_err():
    # wide band only early in the segment: the topline fit tilts below the baseline
    y = np.zeros(100)
    y[20:40:2] = 10
    assert _fit(y).err


def test_residual_modes():
    y = 2 + 3 * T
    f = _fit(y)
    assert np.array_equal(reg.residual(y, f, "none"), y)
    assert np.allclose(reg.residual(f.lines["ml"].y, f, "ml"), 0)
    assert np.allclose(reg.residual(f.lines["tl"].y, f, "rng")[1:], 1) or \
        np.allclose(reg.residual(f.lines["tl"].y, f, "rng"), 1)


def test_residual_roundtrip():
    rng = np.random.default_rng(1)
    y = 5 - T + rng.normal(0, 0.3, len(T))
    f = _fit(y)
    for mode in ("bl", "ml", "tl", "rng", "none"):
        assert np.allclose(reg.inverse_residual(reg.residual(y, f, mode), f, mode), y)


def test_resets():
    flat5 = _fit(np.full(100, 5.0))
    assert abs(reg.reset_features([flat5, flat5])[1]["ml"]) < 1e-12
    a, b = _fit(np.full(100, 3.0)), _fit(np.full(100, 5.0))
    r = reg.reset_features([a, b])
    assert r[0]["ml"] == 0 and np.isclose(r[1]["ml"], 2)
