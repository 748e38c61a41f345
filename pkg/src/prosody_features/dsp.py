"""Numeric kernels shared by the feature extractors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft, signal

_WINDOW_NAMES = {
    "hamming": "hamming",
    "hanning": "hann",
    "hann": "hann",
    "kaiser": "kaiser",
    "rectangular": "boxcar",
    "boxcar": "boxcar",
    "blackman": "blackman",
}


@dataclass
class FilterSpec:
    btype: str = "none"
    f: float | list[float] = -1
    ord: int = 5

    @classmethod
    def from_cfg(cls, d: dict) -> "FilterSpec":
        return cls(d.get("btype", "none"), d.get("f", -1), int(d.get("ord", 5)))


@dataclass
class EnergyContour:
    t: np.ndarray
    e: np.ndarray


def butter_filter(x: np.ndarray, fs: float, spec: FilterSpec) -> np.ndarray:
    """Zero-phase Butterworth filter; ``btype == 'none'`` is the identity."""
    x = np.asarray(x, dtype=float)
    if spec.btype == "none":
        return x.copy()
    nyq = fs / 2.0
    f = np.atleast_1d(np.asarray(spec.f, dtype=float))
    if spec.btype in ("band", "bandpass", "bandstop"):
        if len(f) != 2 or not f[0] < f[1]:
            raise ValueError(f"band filter needs two ascending cutoffs, got {spec.f}")
    elif len(f) != 1:
        raise ValueError(f"{spec.btype} filter needs one cutoff, got {spec.f}")
    if np.any(f >= nyq) or np.any(f <= 0):
        raise ValueError(f"cutoff {spec.f} Hz outside (0, {nyq}) for fs={fs}")
    btype = {"band": "bandpass", "low": "lowpass", "high": "highpass"}.get(spec.btype, spec.btype)
    wn = f / nyq if len(f) == 2 else float(f[0] / nyq)
    sos = signal.butter(spec.ord, wn, btype=btype, output="sos")
    return signal.sosfiltfilt(sos, x)


def get_window(n: int, wintyp: str = "hamming", winparam=None) -> np.ndarray:
    try:
        name = _WINDOW_NAMES[wintyp]
    except KeyError:
        raise ValueError(f"unknown window type {wintyp!r}") from None
    if n <= 1:
        return np.ones(max(n, 0))
    if name == "kaiser":
        beta = 1.0 if winparam is None else float(winparam)
        return signal.get_window(("kaiser", beta), n, fftbins=False)
    return signal.get_window(name, n, fftbins=False)


def rms_energy(x: np.ndarray, fs: float, win: float, sts: float,
               wintyp: str = "hamming", winparam=None) -> EnergyContour:
    """Window-weighted RMS at step centers ``0, sts, 2 sts, ...``.

    Each value is sqrt(sum(w x^2) / sum(w)) over the window, so a constant
    signal keeps its level regardless of the window shape. Samples beyond the
    signal edges count as zero.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    wl = max(1, int(round(win * fs)))
    w = get_window(wl, wintyp, winparam)
    dur = n / fs
    t = np.arange(0.0, dur + 1e-12, sts)
    if len(t) == 0 or n == 0:
        return EnergyContour(t, np.zeros(len(t)))
    # full convolution of x^2 with the window, then pick window centers
    conv = signal.oaconvolve(x * x, w[::-1], mode="full")
    centers = np.clip(np.round(t * fs).astype(int), 0, n - 1)
    half = wl // 2
    idx = centers + (wl - 1) - half
    idx = np.clip(idx, 0, len(conv) - 1)
    e2 = np.maximum(conv[idx], 0.0) / w.sum()
    e = np.sqrt(e2)
    e[e < 1e-12] = 0.0
    return EnergyContour(t, e)


def dct_transform(y: np.ndarray) -> np.ndarray:
    return fft.dct(np.asarray(y, dtype=float), type=2, norm="ortho")


def idct_transform(c: np.ndarray, keep=None) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if keep is not None:
        mask = np.zeros(len(c), dtype=bool)
        mask[np.asarray(list(keep), dtype=int)] = True
        c = np.where(mask, c, 0.0)
    return fft.idct(c, type=2, norm="ortho")


def bin_frequency(k, fs: float, n: int):
    """Frequency of DCT-II coefficient k for a length-n signal at rate fs."""
    return np.asarray(k) * fs / (2.0 * n)


def polyfit(t: np.ndarray, y: np.ndarray, ord: int) -> np.ndarray:
    """Least-squares polynomial coefficients, highest power first."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(t) != len(y):
        raise ValueError("polyfit: t and y differ in length")
    if len(t) < ord + 1:
        raise ValueError(f"polyfit: {len(t)} points for order {ord}")
    if ord > 0 and np.ptp(t) == 0:
        raise ValueError("polyfit: all abscissae equal")
    v = np.vander(t, ord + 1)
    # column scaling keeps the system well conditioned for large |t|
    scale = np.sqrt((v * v).sum(axis=0))
    scale[scale == 0] = 1.0
    c, *_ = np.linalg.lstsq(v / scale, y, rcond=None)
    return c / scale


def polyval(c: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.polyval(c, np.asarray(t, dtype=float))


def fit_line(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Least-squares line [slope, intercept]; a single point gives a flat line."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(t) == 1 or np.ptp(t) == 0:
        return np.array([0.0, float(np.mean(y))])
    return polyfit(t, y, 1)
