"""Standard f0 and energy features: statistics, part quotients, shape, spectral balance."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .dsp import FilterSpec, butter_filter, get_window, polyfit

STATS = ("m", "sd", "med", "iqr", "max", "min")


@dataclass
class SpectralBalanceSpec:
    domain: str = "time"
    alpha: float = 0.95
    win: float = -1
    btype: str = "none"
    f: float | list[float] = -1


def _div(a: float, b: float) -> float:
    return a / b if b != 0 and np.isfinite(b) else math.nan


def describe(y: np.ndarray) -> dict[str, float]:
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        return {k: math.nan for k in STATS}
    q1, med, q3 = np.percentile(y, [25, 50, 75])
    return {"m": float(y.mean()), "sd": float(y.std()), "med": float(med),
            "iqr": float(q3 - q1), "max": float(y.max()), "min": float(y.min())}


def standard_stats(y: np.ndarray, y_nrm: np.ndarray | None = None, dur: float | None = None,
                   dur_nrm_ctx: float | None = None, fs: float = 100) -> dict[str, float]:
    """Statistics over the analysis window; ``_nrm`` variants divide by the
    same statistic over the normalization window."""
    out = describe(y)
    out["dur"] = float(dur if dur is not None else len(y) / fs)
    if y_nrm is not None:
        ctx = describe(y_nrm)
        for k in STATS:
            out[f"{k}_nrm"] = _div(out[k], ctx[k])
        out["dur_nrm"] = _div(out["dur"], dur_nrm_ctx if dur_nrm_ctx is not None
                              else len(y_nrm) / fs)
    return out


def part_quotients(y: np.ndarray, fs: float = 100, win: float = 0.3) -> dict[str, float]:
    """Mean quotients of the initial and final window against the rest."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    nw = max(1, int(round(win * fs)))
    nan = {k: math.nan for k in ("qi", "qf", "qb", "qm")}
    if n <= nw:
        return nan
    ini, fin = y[:nw], y[-nw:]
    mi, mf = ini.mean(), fin.mean()
    out = {
        "qi": _div(mi, y[nw:].mean()),
        "qf": _div(mf, y[:-nw].mean()),
        "qb": _div(mi, mf),
    }
    mid = y[nw:n - nw]
    if len(mid) == 0:
        out["qm"] = math.nan
    else:
        out["qm"] = _div(max(mi, mf), mid.mean())
    return out


def shape_poly(y: np.ndarray) -> dict[str, float]:
    y = np.asarray(y, dtype=float)
    if len(y) < 3:
        return {"c0": math.nan, "c1": math.nan, "c2": math.nan}
    tn = np.linspace(0.0, 1.0, len(y))
    c = polyfit(tn, y, 2)
    return {"c0": float(c[2]), "c1": float(c[1]), "c2": float(c[0])}


def pre_emphasis_factor(alpha: float, fs: float) -> float:
    """Factors above 1 are boundary frequencies in Hz."""
    return math.exp(-2.0 * math.pi * alpha / fs) if alpha > 1 else float(alpha)


def _spl(x: np.ndarray) -> float:
    rms = math.sqrt(float(np.mean(x * x)))
    return 20.0 * math.log10(rms) if rms > 0 else -math.inf


def spectral_balance(x: np.ndarray, fs: float, spec: SpectralBalanceSpec) -> float:
    """SPLH - SPL in dB; NaN for silent input."""
    x = np.asarray(x, dtype=float)
    if spec.win is not None and spec.win > 0:
        nw = int(round(spec.win * fs))
        if nw < len(x):
            c = len(x) // 2
            x = x[max(0, c - nw // 2): c - nw // 2 + nw]
    if len(x) < 2 or not np.any(x):
        return math.nan
    if spec.btype != "none" and len(x) > 3 * 5 * 2:
        x = butter_filter(x, fs, FilterSpec(spec.btype, spec.f, 5))
    if spec.domain == "time":
        a = pre_emphasis_factor(spec.alpha, fs)
        xh = signal.lfilter([1.0, -a], [1.0], x)
        lvl, lvl_h = _spl(x), _spl(xh)
    elif spec.domain == "freq":
        w = get_window(len(x), "hamming")
        p = np.abs(np.fft.rfft(x * w)) ** 2
        f = np.fft.rfftfreq(len(x), 1.0 / fs)
        if spec.btype != "none":
            band = np.atleast_1d(np.asarray(spec.f, dtype=float))
            if spec.btype == "low":
                keep = f <= band[0]
            elif spec.btype == "high":
                keep = f >= band[0]
            else:
                keep = (f >= band[0]) & (f <= band[-1])
            p, f = p[keep], f[keep]
        g = (1.0 + f ** 2 / 200.0 ** 2) / (1.0 + f ** 2 / 5000.0 ** 2)
        total = p.sum()
        if total <= 0:
            return math.nan
        lvl = 10.0 * math.log10(total)
        lvl_h = 10.0 * math.log10((p * g).sum())
    else:
        raise ValueError(f"unknown spectral balance domain {spec.domain!r}")
    if not (np.isfinite(lvl) and np.isfinite(lvl_h)):
        return math.nan
    return float(lvl_h - lvl)


def file_level(y: np.ndarray, fs: float = 100, win: float = 0.3) -> dict[str, float]:
    out = standard_stats(y, fs=fs)
    out.update(part_quotients(y, fs, win))
    out.update(shape_poly(y))
    return out
