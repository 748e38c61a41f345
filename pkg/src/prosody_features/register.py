"""Register stylization: base, mid and top lines plus range within a segment."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .dsp import fit_line

logger = logging.getLogger(__name__)

LINES = ("bl", "ml", "tl", "rng")
RANGE_EPS = 1e-6


@dataclass
class MedianSequence:
    t: np.ndarray
    bl: np.ndarray
    ml: np.ndarray
    tl: np.ndarray


@dataclass
class Line:
    c: np.ndarray          # [slope, intercept] over normalized time
    y: np.ndarray          # stylized values at the segment samples
    rate: float            # slope per second of real time
    m: float


@dataclass
class RegisterFit:
    t: np.ndarray
    tn: np.ndarray
    lines: dict[str, Line]
    err: bool
    nrm_rng: tuple[float, float] = (0.0, 1.0)
    t_span: tuple[float, float] = (0.0, 0.0)
    seq: MedianSequence | None = field(default=None, repr=False)

    def __getitem__(self, kind: str) -> Line:
        return self.lines[kind]

    def normalize(self, t) -> np.ndarray:
        return _minmax(np.asarray(t, dtype=float), self.t_span, self.nrm_rng)

    def value_at(self, kind: str, t) -> np.ndarray:
        """Stylized line evaluated at arbitrary real times (extrapolating)."""
        return np.polyval(self.lines[kind].c, self.normalize(t))


def _minmax(t: np.ndarray, span: tuple[float, float], rng) -> np.ndarray:
    a, b = float(rng[0]), float(rng[1])
    lo, hi = span
    if hi - lo <= 0:
        return np.full(np.shape(t), a)
    return a + (t - lo) * (b - a) / (hi - lo)


def median_sequences(y: np.ndarray, t: np.ndarray, decl_win: float,
                     prct_bl: float = 10, prct_tl: float = 90, fs: float = 100) -> MedianSequence:
    """Windowed medians at a one-sample step.

    Windows always hold ``round(decl_win * fs)`` samples and are placed only
    where they fit completely; each gets the mid time of its first and last
    sample. A segment no longer than one window yields a single window.
    """
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    n = len(y)
    if n == 0:
        raise ValueError("empty segment")
    wl = max(1, int(round(decl_win * fs)))
    if n <= wl:
        if n < wl:
            logger.debug("segment of %d samples shorter than register window", n)
        windows = y[None, :]
        tw = np.array([0.5 * (t[0] + t[-1])])
    else:
        windows = np.lib.stride_tricks.sliding_window_view(y, wl)
        tw = 0.5 * (t[: n - wl + 1] + t[wl - 1:])
    lo = np.percentile(windows, prct_bl, axis=1, keepdims=True)
    hi = np.percentile(windows, prct_tl, axis=1, keepdims=True)
    bl = np.nanmedian(np.where(windows <= lo, windows, np.nan), axis=1)
    tl = np.nanmedian(np.where(windows >= hi, windows, np.nan), axis=1)
    ml = np.median(windows, axis=1)
    return MedianSequence(tw, bl, ml, tl)


def fit_register(seq: MedianSequence, t: np.ndarray, nrm_rng=(0.0, 1.0),
                 span: tuple[float, float] | None = None) -> RegisterFit:
    """Fit the four register lines to a median sequence.

    ``t`` are the segment sample times at which stylized values are
    reported. Time is minmax-normalized over ``span`` (default: first and
    last sample time) to ``nrm_rng``.
    """
    t = np.asarray(t, dtype=float)
    span = span or (float(t[0]), float(t[-1]))
    tn = _minmax(t, span, nrm_rng)
    tq = _minmax(seq.t, span, nrm_rng)
    dt = span[1] - span[0]
    scale = (nrm_rng[1] - nrm_rng[0]) / dt if dt > 0 else 0.0
    lines = {}
    for kind, vals in (("bl", seq.bl), ("ml", seq.ml), ("tl", seq.tl), ("rng", seq.tl - seq.bl)):
        c = fit_line(tq, vals)
        y = np.polyval(c, tn)
        lines[kind] = Line(c, y, float(c[0] * scale), float(np.mean(y)))
    err = bool(np.any(lines["bl"].y > lines["tl"].y + 1e-9))
    return RegisterFit(t, tn, lines, err, tuple(nrm_rng), span, seq)


def stylize(y: np.ndarray, t: np.ndarray, decl_win: float, prct_bl: float, prct_tl: float,
            nrm_rng=(0.0, 1.0), fs: float = 100) -> RegisterFit:
    return fit_register(median_sequences(y, t, decl_win, prct_bl, prct_tl, fs), t, nrm_rng)


def residual(y: np.ndarray, fit: RegisterFit | None, mode: str) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if mode == "none" or fit is None:
        return y.copy()
    if mode in ("bl", "ml", "tl"):
        return y - fit.lines[mode].y
    if mode == "rng":
        bl, tl = fit.lines["bl"].y, fit.lines["tl"].y
        den = tl - bl
        if np.any(den <= RANGE_EPS):
            logger.warning("register range collapses within segment; denominator clamped")
            den = np.maximum(den, RANGE_EPS)
        return (y - bl) / den
    raise ValueError(f"unknown register mode {mode!r}")


def inverse_residual(r: np.ndarray, fit: RegisterFit, mode: str) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if mode == "none":
        return r.copy()
    if mode in ("bl", "ml", "tl"):
        return r + fit.lines[mode].y
    if mode == "rng":
        bl, tl = fit.lines["bl"].y, fit.lines["tl"].y
        return bl + r * np.maximum(tl - bl, RANGE_EPS)
    raise ValueError(f"unknown register mode {mode!r}")


def reset_features(fits: list[RegisterFit]) -> list[dict[str, float]]:
    """Line resets between consecutive segments; the first segment gets 0."""
    out = []
    prev = None
    for fit in fits:
        if prev is None:
            out.append({k: 0.0 for k in LINES})
        else:
            out.append({k: float(fit.lines[k].y[0] - prev.lines[k].y[-1]) for k in LINES})
        prev = fit
    return out
