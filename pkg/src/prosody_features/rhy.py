"""DCT-based rhythm features of f0 and energy contours."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .annot import Item
from .dsp import bin_frequency, dct_transform, get_window, idct_transform


@dataclass
class RhythmSpec:
    lb: float = 0.0
    ub: float = 10.0
    nsm: int = 3
    rmo: bool = False
    wintyp: str = "kaiser"
    winparam: float | None = 1.0
    rb: float = 1.0

    @classmethod
    def from_cfg(cls, d: dict) -> "RhythmSpec":
        return cls(float(d.get("lb", 0)), float(d.get("ub", 10)), int(d.get("nsm", 3)),
                   bool(d.get("rmo", 0)), d.get("wintyp", "kaiser"), d.get("winparam", 1),
                   float(d.get("wgt", {}).get("rb", 1)))


@dataclass
class RhythmResult:
    c: np.ndarray
    f: np.ndarray
    c_orig: np.ndarray
    f_orig: np.ndarray
    y_w: np.ndarray
    keep: np.ndarray
    cbin: np.ndarray = field(default_factory=lambda: np.zeros(0))
    fbin: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sm: list[float] = field(default_factory=list)
    m: float = math.nan
    sd: float = math.nan
    mae: float = math.nan
    n_peak: int = 0
    f_max: float = math.nan
    dur: float = 0.0

    def features(self) -> dict[str, float]:
        out = {"m": self.m, "sd": self.sd, "mae": self.mae, "n_peak": self.n_peak,
               "f_max": self.f_max, "dur": self.dur}
        for i, v in enumerate(self.sm, start=1):
            out[f"sm{i}"] = v
        return out


def _peaks(a: np.ndarray) -> np.ndarray:
    """Local maxima; interior ties resolve to the left, edges must be strict."""
    n = len(a)
    if n == 0:
        return np.zeros(0, dtype=int)
    if n == 1:
        return np.array([0])
    out = []
    if a[0] > a[1]:
        out.append(0)
    for i in range(1, n - 1):
        if a[i] > a[i - 1] and a[i] >= a[i + 1]:
            out.append(i)
    if a[-1] > a[-2]:
        out.append(n - 1)
    return np.array(out, dtype=int)


def rhythm_spectrum(y: np.ndarray, fs: float, spec: RhythmSpec) -> RhythmResult:
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < 4:
        raise ValueError(f"rhythm analysis needs at least 4 samples, got {n}")
    y_w = y * get_window(n, spec.wintyp, spec.winparam)
    c_orig = dct_transform(y_w)
    # rounding residue of an exactly representable spectrum counts as zero
    c_orig[np.abs(c_orig) <= 1e-12 * max(1.0, float(np.max(np.abs(c_orig))))] = 0.0
    f_orig = bin_frequency(np.arange(n), fs, n)
    keep = (f_orig >= spec.lb) & (f_orig <= spec.ub)
    if spec.rmo:
        keep[0] = False
    c, f = c_orig[keep], f_orig[keep]
    res = RhythmResult(c, f, c_orig, f_orig, y_w, keep, dur=n / fs)
    a = np.abs(c)
    edges = np.arange(math.floor(spec.lb), math.ceil(spec.ub) + 1, 1.0)
    if len(edges) < 2:
        edges = np.array([spec.lb, spec.ub])
    idx = np.clip(np.searchsorted(edges, f, side="right") - 1, 0, len(edges) - 2)
    res.cbin = np.bincount(idx, weights=a, minlength=len(edges) - 1)
    res.fbin = edges[:-1]
    rec = idct_transform(c_orig, np.flatnonzero(keep))
    res.mae = float(np.mean(np.abs(y_w - rec)))
    total = a.sum()
    if len(a) == 0 or total <= 0:
        res.sm = [math.nan] * spec.nsm
        return res
    w = a / total
    sm1 = float(w @ f)
    var = float(w @ (f - sm1) ** 2)
    sm = [sm1, var]
    sdv = math.sqrt(var)
    for k in range(3, spec.nsm + 1):
        sm.append(float(w @ (f - sm1) ** k) / sdv ** k if sdv > 0 else math.nan)
    res.sm = sm[: spec.nsm]
    res.m, res.sd = sm1, sdv
    i_max = int(np.argmax(a))
    res.f_max = float(f[i_max])
    ref = a[int(np.argmin(np.abs(f - sm1)))]
    pk = _peaks(a)
    res.n_peak = int(np.sum(a[pk] >= ref))
    return res


def event_rate(items: list[Item], t_on: float, t_off: float) -> float:
    """Events (or segment proportions) per second within [t_on, t_off)."""
    dur = t_off - t_on
    if dur <= 0:
        return math.nan
    count = 0.0
    for it in items:
        if it.is_event:
            if t_on <= it.t_start < t_off:
                count += 1.0
        else:
            ov = min(it.t_end, t_off) - max(it.t_start, t_on)
            if ov > 0:
                count += ov / (it.t_end - it.t_start)
    return count / dur


def rate_influence(res: RhythmResult, rate: float, rb: float = 1.0) -> dict[str, float]:
    a = np.abs(res.c)
    band = (res.f >= rate - rb) & (res.f <= rate + rb)
    total = a.sum()
    out = {"rate": rate, "prop": a[band].sum() / total if total > 0 else math.nan}
    sel = np.flatnonzero(res.keep)[band]
    rec = idct_transform(res.c_orig, sel)
    out["mae"] = float(np.mean(np.abs(res.y_w - rec)))
    out["dgm"] = rate - res.f_max if np.isfinite(res.f_max) else math.nan
    pk = _peaks(a)
    if len(pk):
        near = res.f[pk[int(np.argmin(np.abs(res.f[pk] - rate)))]]
        out["dlm"] = float(rate - near)
    else:
        out["dlm"] = out["dgm"]
    return out
