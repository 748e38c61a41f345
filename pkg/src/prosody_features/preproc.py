"""f0 preprocessing, base values, semitones and analysis windows."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, signal

from .annot import Item

logger = logging.getLogger(__name__)


@dataclass
class OutlierSpec:
    m: str = "mean"
    f: float = 2.0


@dataclass
class SmoothSpec:
    mtd: str = "sgolay"
    win: int = 7
    ord: int = 3


@dataclass
class AnalysisWindow:
    t_on: float
    t_off: float
    center: float


def detect_outliers(y: np.ndarray, spec: OutlierSpec) -> np.ndarray:
    """Boolean mask of values strictly outside the deviation band."""
    y = np.asarray(y, dtype=float)
    if len(y) < 4:
        return np.zeros(len(y), dtype=bool)
    if spec.m == "mean":
        mu, sd = y.mean(), y.std()
        lo, hi = mu - spec.f * sd, mu + spec.f * sd
    else:
        q1, med, q3 = np.percentile(y, [25, 50, 75])
        iqr = q3 - q1
        if spec.m == "median":
            lo, hi = med - spec.f * iqr, med + spec.f * iqr
        elif spec.m == "fence":
            lo, hi = q1 - spec.f * iqr, q3 + spec.f * iqr
        else:
            raise ValueError(f"unknown outlier method {spec.m!r}")
    return (y < lo) | (y > hi)


def remove_outliers(y: np.ndarray, spec: OutlierSpec) -> np.ndarray:
    """Set outliers among the nonzero values to 0."""
    y = np.asarray(y, dtype=float).copy()
    nz = np.flatnonzero(y > 0)
    y[nz[detect_outliers(y[nz], spec)]] = 0.0
    return y


def interpolate(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    nz = np.flatnonzero(y > 0)
    if len(nz) == 0:
        raise ValueError("contour has no defined f0 values")
    # np.interp holds the edge values outside the defined range
    return np.interp(np.arange(len(y)), nz, y[nz])


def smooth(y: np.ndarray, spec: SmoothSpec) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if spec.mtd == "none" or len(y) < 3:
        return y.copy()
    win = int(spec.win)
    if win > len(y):
        win = len(y) if len(y) % 2 else len(y) - 1
    if spec.mtd == "sgolay":
        ord_ = min(int(spec.ord), win - 1)
        return signal.savgol_filter(y, win, ord_, mode="interp")
    if spec.mtd == "med":
        return ndimage.median_filter(y, size=win, mode="nearest")
    raise ValueError(f"unknown smoothing method {spec.mtd!r}")


def base_value(y: np.ndarray, prct: float) -> float:
    """Median of the values at or below the given percentile."""
    if prct == 0:
        return 1.0
    y = np.asarray(y, dtype=float)
    y = y[y > 0]
    if len(y) == 0:
        return 1.0
    return float(np.median(y[y <= np.percentile(y, prct)]))


def to_semitones(y, bv: float, st: bool = True):
    y = np.asarray(y, dtype=float)
    if bv <= 0:
        raise ValueError(f"base value must be positive, got {bv}")
    if st:
        return 12.0 * np.log2(y / bv)
    return y - bv


def from_semitones(y, bv: float, st: bool = True):
    y = np.asarray(y, dtype=float)
    if st:
        return bv * np.power(2.0, y / 12.0)
    return y + bv


def clean_contour(y_hz: np.ndarray, out: OutlierSpec, sm: SmoothSpec) -> np.ndarray:
    """Outlier removal, interpolation and smoothing; result is in Hz."""
    y = remove_outliers(y_hz, out)
    y = interpolate(y)
    y = smooth(y, sm)
    return np.maximum(y, 1e-3)


def preprocess_channel(y_hz: np.ndarray, bv: float, cfg_pp: dict) -> np.ndarray:
    out = OutlierSpec(**cfg_pp.get("out", {}))
    sm = SmoothSpec(**cfg_pp.get("smooth", {}))
    y = clean_contour(y_hz, out, sm)
    return to_semitones(y, bv, bool(cfg_pp.get("st", 1)))


def voiced_values(y_hz: np.ndarray, cfg_pp: dict) -> np.ndarray:
    """Preprocessed Hz values at originally voiced positions, for base values."""
    out = OutlierSpec(**cfg_pp.get("out", {}))
    sm = SmoothSpec(**cfg_pp.get("smooth", {}))
    voiced = np.asarray(y_hz) > 0
    if not voiced.any():
        return np.zeros(0)
    return clean_contour(y_hz, out, sm)[voiced]


def window_lengths(cfg_pp: dict, feature_set: str | None = None) -> tuple[float, float]:
    point_win = float(cfg_pp.get("point_win", 0.3))
    nrm_win = float(cfg_pp.get("nrm_win", 0.6))
    if feature_set and isinstance(cfg_pp.get(feature_set), dict):
        over = cfg_pp[feature_set]
        point_win = float(over.get("point_win", point_win))
        nrm_win = float(over.get("nrm_win", nrm_win))
    return point_win, nrm_win


def make_windows(item: Item, kind: str, point_win: float, nrm_win: float,
                 parent: tuple[float, float] | None = None) -> AnalysisWindow:
    """Analysis (``point``) or normalization (``nrm``) window around an item."""
    center = item.center
    if kind == "point":
        if item.is_event:
            on, off = center - point_win / 2, center + point_win / 2
        else:
            on, off = item.t_start, item.t_end
    elif kind == "nrm":
        length = max(nrm_win, item.t_end - item.t_start)
        on, off = center - length / 2, center + length / 2
    else:
        raise ValueError(f"unknown window kind {kind!r}")
    if parent is not None:
        on, off = max(on, parent[0]), min(off, parent[1])
    on = max(on, 0.0)
    return AnalysisWindow(on, off, min(max(center, on), off))
