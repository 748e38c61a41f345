import math

import numpy as np
import pytest

from prosody_features import bnd
from prosody_features.annot import Item, Tier


def test_segment_context_pause():
    tier = Tier("w", "segment", [Item("a", 0, 1), Item("b", 1.2, 2)])
    c = bnd.make_contexts(tier, "std")
    assert len(c) == 1 and np.isclose(c[0].p, 0.2)


def test_event_contexts():
    tier = Tier("e", "event", [Item("x", t, t) for t in (1, 2, 3)])
    c = bnd.make_contexts(tier, "std", duration=4)
    assert len(c) == 1
    assert c[0].seg1 == (1, 2) and c[0].seg2 == (2, 3) and c[0].p == 0


def test_trend_bounds():
    tier = Tier("w", "segment", [Item("a", 0.5, 2), Item("b", 2, 4)])
    c = bnd.make_contexts(tier, "trend", chunks=[(0, 5)], cross_chunk=False, duration=5)
    assert c[0].bounds == [0, 2, 2, 5]


def test_aic():
    assert bnd.aic(1.0, 57, 3) == 6
    assert bnd.aic_increase(2.5, 2.5, 40) == -6


def test_corr_distance_endpoints():
    a = np.linspace(0, 1, 10)
    assert bnd.corr_distance(a, a) == 0
    assert bnd.corr_distance(a, -a) == 1


def _ctx(mode, b=1.37):
    tier = Tier("w", "segment", [Item("a", 0, b), Item("b", b, 3)])
    return bnd.make_contexts(tier, mode, 1.0, [(0, 3)], True, 0.3, 3)[0]


@pytest.mark.parametrize("mode", ["std", "win", "trend"])
def test_continuous_line_null(mode):
    t = np.arange(300) * 0.01
    d = bnd.discontinuity(_ctx(mode), 2 - 1.5 * t, t, 0.1, 10, 90)
    for k in ("bl", "ml", "tl", "rng"):
        f = d[k]
        for name in ("rms", "rms_pre", "rms_post", "sd_pre", "sd_post", "sd_prepost",
                     "corrD", "corrD_pre", "corrD_post"):
            assert abs(f[name]) < 1e-6, (k, name, f[name])
        assert abs(f["r"]) < 1e-6
        assert math.isclose(f["rmsR"], 1, abs_tol=1e-3)


def test_reset_of_three():
    t = np.arange(300) * 0.01
    y = np.where(t < 1.5, 2 - t, 5 - t)
    tier = Tier("w", "segment", [Item("a", 0, 1.5), Item("b", 1.5, 3)])
    for mode in ("std", "win", "trend"):
        ctx = bnd.make_contexts(tier, mode, 1.0, [(0, 3)], True, 0.3, 3)[0]
        d = bnd.discontinuity(ctx, y, t, 0.1, 10, 90)
        assert abs(d["ml"]["r"] - 3) < 0.1, mode


def test_short_segment_gives_missing():
    t = np.arange(300) * 0.01
    tier = Tier("w", "segment", [Item("a", 0, 0.005), Item("b", 0.005, 3)])
    ctx = bnd.make_contexts(tier, "std")[0]
    d = bnd.discontinuity(ctx, t, t, 0.1, 10, 90)
    assert d["ml"]["rms"] is None
