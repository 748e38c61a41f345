"""Local contour stylization, gestalt features and resynthesis."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import register as reg
from .dsp import polyfit
from .preproc import from_semitones

logger = logging.getLogger(__name__)

CONTAIN_TOL = 1e-6


@dataclass
class PolyFit:
    c: np.ndarray
    ord: int
    y: np.ndarray
    tn: np.ndarray


def normalize_time(t, t_on: float, t_off: float, center: float | None = None,
                   case: str = "segment", rng=(-1.0, 1.0)) -> np.ndarray:
    """Map times to normalized time.

    ``segment`` and ``event`` map [t_on, t_off] linearly onto ``rng``.
    ``both`` maps [t_on, center) onto [-1, 0) and [center, t_off] onto [0, 1].
    """
    t = np.asarray(t, dtype=float)
    if case in ("segment", "event"):
        return reg._minmax(t, (t_on, t_off), rng)
    if case != "both":
        raise ValueError(f"unknown normalization case {case!r}")
    out = np.empty_like(t)
    left = t < center
    d1, d2 = center - t_on, t_off - center
    out[left] = -1.0 + (t[left] - t_on) / d1 if d1 > 0 else -1.0
    out[~left] = (t[~left] - center) / d2 if d2 > 0 else 0.0
    return out


def fit_local(y: np.ndarray, tn: np.ndarray, ord: int) -> PolyFit:
    y = np.asarray(y, dtype=float)
    tn = np.asarray(tn, dtype=float)
    c = polyfit(tn, y, ord)
    return PolyFit(c, ord, np.polyval(c, tn), tn)


def coef_dict(c: np.ndarray, prefix: str = "c") -> dict[str, float]:
    """Descending coefficients as ``{c0: intercept, c1: ..., cN: leading}``."""
    c = np.asarray(c, dtype=float)
    return {f"{prefix}{i}": float(v) for i, v in enumerate(c[::-1])}


def gestalt(y: np.ndarray, t: np.ndarray, tn: np.ndarray, local_fit: reg.RegisterFit,
            global_fit: reg.RegisterFit, ord: int) -> dict:
    """Deviation of the local register from the global one over the local span."""
    out: dict = {}
    for kind in reg.LINES:
        g = global_fit.value_at(kind, t)
        lo = local_fit.lines[kind].y
        d = lo - g
        out[kind] = {
            "rms": float(np.sqrt(np.mean(d * d))),
            "sd": float(local_fit.lines[kind].rate - global_fit.lines[kind].rate),
            "d_init": float(d[0]),
            "d_fin": float(d[-1]),
        }
    bl, tl = global_fit.value_at("bl", t), global_fit.value_at("tl", t)
    res = {}
    for kind in reg.LINES:
        if kind == "rng":
            den = tl - bl
            if np.any(den <= reg.RANGE_EPS):
                logger.warning("global range collapses at local segment; denominator clamped")
                den = np.maximum(den, reg.RANGE_EPS)
            r = (y - bl) / den
        else:
            r = y - global_fit.value_at(kind, t)
        res[kind] = {"c": polyfit(tn, r, ord)}
    out["residual"] = res
    return out


def resynthesize(y_st: np.ndarray, globals_: list[tuple[np.ndarray, reg.RegisterFit]],
                 locals_: list[tuple[np.ndarray, PolyFit, int]], mode: str,
                 bv: float, st: bool = True) -> np.ndarray:
    """Superpose global register and local polynomial shapes, return Hz.

    ``globals_`` holds (sample indices, fit) per global segment and
    ``locals_`` holds (sample indices, polynomial fit, global index). Outside
    any global segment the preprocessed contour is kept.
    """
    out = np.asarray(y_st, dtype=float).copy()
    for idx, fit in globals_:
        if mode == "rng":
            out[idx] = 0.5 * (fit.lines["bl"].y + fit.lines["tl"].y)
        elif mode in ("bl", "ml", "tl"):
            out[idx] = fit.lines[mode].y
    for idx, pf, gi in locals_:
        g_idx, g_fit = globals_[gi]
        pos = np.searchsorted(g_idx, idx)
        if mode == "none":
            out[idx] = pf.y
        elif mode == "rng":
            bl, tl = g_fit.lines["bl"].y[pos], g_fit.lines["tl"].y[pos]
            out[idx] = bl + pf.y * np.maximum(tl - bl, reg.RANGE_EPS)
        else:
            out[idx] = pf.y + g_fit.lines[mode].y[pos]
    return from_semitones(out, bv, st)


def parent_index(t_on: float, t_off: float, parents: list[tuple[float, float]]) -> int | None:
    """Index of the parent span containing [t_on, t_off], else None."""
    for i, (a, b) in enumerate(parents):
        if t_on >= a - CONTAIN_TOL and t_off <= b + CONTAIN_TOL:
            return i
    return None


def align_centers(centers: list[float], how: str) -> float | None:
    """Pick one center when several accent stamps fall in one segment."""
    if len(centers) == 1:
        return centers[0]
    if not centers:
        return None
    if how == "left":
        return centers[0]
    if how == "right":
        return centers[-1]
    return None
