import numpy as np

from prosody_features.dsp import (FilterSpec, bin_frequency, butter_filter, dct_transform,
                                  idct_transform, polyfit, rms_energy)


def test_filter_none_identity():
    x = np.random.default_rng(0).normal(size=100)
    assert np.array_equal(butter_filter(x, 16000, FilterSpec("none")), x)


def test_lowpass_dc_unchanged():
    x = np.full(4000, 0.3)
    y = butter_filter(x, 16000, FilterSpec("low", 1000, 5))
    assert np.max(np.abs(y - x)) < 1e-6


def test_band_attenuates_50hz():
    t = np.arange(16000) / 16000
    x = np.sin(2 * np.pi * 50 * t)
    y = butter_filter(x, 16000, FilterSpec("band", [200, 4000], 5))
    assert np.sqrt(np.mean(y ** 2)) < 0.05 * np.sqrt(np.mean(x ** 2))


def test_rms_constant_and_silence():
    e = rms_energy(np.full(16000, 0.5), 16000, 0.05, 0.01, "boxcar")
    assert np.allclose(e.e[5:-5], 0.5)
    assert np.all(rms_energy(np.zeros(1600), 16000, 0.05, 0.01).e == 0)


def test_rms_sine():
    t = np.arange(16000) / 16000
    e = rms_energy(np.sin(2 * np.pi * 100 * t), 16000, 0.05, 0.01, "boxcar")
    assert np.allclose(e.e[5:-5], np.sqrt(0.5), atol=1e-3)


def test_dct_constant_and_inverse():
    c = dct_transform(np.full(50, 3.0))
    assert abs(c[0]) > 0 and np.allclose(c[1:], 0, atol=1e-12)
    y = np.random.default_rng(1).normal(size=64)
    assert np.allclose(idct_transform(dct_transform(y)), y)


def test_dct_cosine_frequency():
    t = np.arange(200) / 100
    c = dct_transform(np.cos(2 * np.pi * 4 * t))
    assert abs(bin_frequency(int(np.argmax(np.abs(c))), 100, 200) - 4) < 0.5


def test_bin_frequency():
    assert bin_frequency(0, 100, 200) == 0
    assert bin_frequency(16, 100, 200) == 4.0
    assert bin_frequency(199, 100, 200) < 50


def test_polyfit_exact_and_constant():
    t = np.linspace(-1, 1, 20)
    assert np.allclose(polyfit(t, 2 * t ** 3 - t, 3), [2, 0, -1, 0], atol=1e-9)
    assert np.allclose(polyfit(t, np.full(20, 5.0), 1), [0, 5], atol=1e-12)


def test_polyfit_noisy_line():
    rng = np.random.default_rng(2)
    t = np.linspace(0, 1, 500)
    c = polyfit(t, 3 * t + 1 + rng.normal(0, 0.1, 500), 1)
    assert abs(c[0] - 3) < 0.1
