"""Jitter and shimmer from pulse marks."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .dsp import polyfit

logger = logging.getLogger(__name__)


@dataclass
class PeriodSequence:
    periods: np.ndarray     # durations of valid periods
    t_on: np.ndarray        # start pulse of each valid period
    t_off: np.ndarray
    pairs: np.ndarray       # index pairs (i, i+1) into the valid periods


def periods(pulses: np.ndarray, t_min: float = 1e-4, t_max: float = 0.02,
            fac_max: float = 1.3) -> PeriodSequence:
    p = np.asarray(pulses, dtype=float)
    d = np.diff(p)
    ok = (d >= t_min) & (d <= t_max)
    idx = np.flatnonzero(ok)
    per = d[idx]
    pairs = []
    for j in range(len(idx) - 1):
        # only periods that are adjacent in the pulse train form a pair
        if idx[j + 1] != idx[j] + 1:
            continue
        a, b = per[j], per[j + 1]
        if max(a, b) / min(a, b) <= fac_max:
            pairs.append((j, j + 1))
    return PeriodSequence(per, p[idx], p[idx + 1], np.array(pairs, dtype=int).reshape(-1, 2))


def jitter(seq: PeriodSequence) -> float:
    if len(seq.pairs) == 0 or len(seq.periods) < 2:
        return math.nan
    d = np.abs(seq.periods[seq.pairs[:, 1]] - seq.periods[seq.pairs[:, 0]])
    return float(d.mean() / seq.periods.mean())


def period_amplitudes(x: np.ndarray, fs: float, seq: PeriodSequence) -> np.ndarray:
    """Peak absolute sample within each valid period."""
    x = np.asarray(x, dtype=float)
    out = np.full(len(seq.periods), np.nan)
    for j, (a, b) in enumerate(zip(seq.t_on, seq.t_off)):
        i0, i1 = int(round(a * fs)), int(round(b * fs))
        i0, i1 = max(i0, 0), min(i1, len(x))
        if i1 > i0:
            out[j] = np.max(np.abs(x[i0:i1]))
    return out


def shimmer(amps: np.ndarray, seq: PeriodSequence) -> float:
    if len(seq.pairs) == 0:
        return math.nan
    amps = np.asarray(amps, dtype=float)
    mean = np.nanmean(amps) if np.any(np.isfinite(amps)) else math.nan
    if not mean or not np.isfinite(mean):
        return math.nan
    d = np.abs(amps[seq.pairs[:, 1]] - amps[seq.pairs[:, 0]])
    d = d[np.isfinite(d)]
    if len(d) == 0:
        return math.nan
    return float(d.mean() / mean)


def time_course(values: np.ndarray, t: np.ndarray, prefix: str) -> dict[str, float]:
    """Order-3 polynomial of a perturbation sequence over time in [-1, 1]."""
    values = np.asarray(values, dtype=float)
    t = np.asarray(t, dtype=float)
    keys = [f"{prefix}_c{i}" for i in range(4)]
    ok = np.isfinite(values)
    values, t = values[ok], t[ok]
    if len(values) < 4 or np.ptp(t) == 0:
        return {k: math.nan for k in keys}
    tn = -1.0 + 2.0 * (t - t.min()) / np.ptp(t)
    c = polyfit(tn, values, 3)
    return {k: float(v) for k, v in zip(keys, c[::-1])}


def voice_features(pulses: np.ndarray, x: np.ndarray | None, fs: float | None,
                   t_min: float, t_max: float, fac_max: float) -> dict[str, float]:
    seq = periods(pulses, t_min, t_max, fac_max)
    out = {"jit": jitter(seq)}
    if len(seq.pairs):
        j0, j1 = seq.pairs[:, 0], seq.pairs[:, 1]
        mid = 0.5 * (seq.t_on[j0] + seq.t_off[j1])
        dist = np.abs(seq.periods[j1] - seq.periods[j0]) / seq.periods.mean()
    else:
        mid = dist = np.zeros(0)
    out.update(time_course(dist, mid, "jit"))
    if x is not None and fs:
        amps = period_amplitudes(x, fs, seq)
        out["shim"] = shimmer(amps, seq)
        sdist = np.abs(amps[seq.pairs[:, 1]] - amps[seq.pairs[:, 0]]) / np.nanmean(amps) \
            if len(seq.pairs) else np.zeros(0)
        out.update(time_course(sdist, mid, "shim"))
    else:
        out["shim"] = math.nan
        out.update({f"shim_c{i}": math.nan for i in range(4)})
    if len(seq.periods) < 2:
        logger.info("fewer than 2 valid periods; voice features missing")
    return out
