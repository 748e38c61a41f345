"""Prosodic boundary features: register discontinuity across a boundary."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import register as reg
from .annot import Tier, is_pause

logger = logging.getLogger(__name__)

AIC_K = 3
SAMPLE_EPS = 1e-6
FEATURES = ("rms", "rms_pre", "rms_post", "r", "d_o", "d_m", "sd_pre", "sd_post", "sd_prepost",
            "corrD", "corrD_pre", "corrD_post", "rmsR", "rmsR_pre", "rmsR_post",
            "aicI", "aicI_pre", "aicI_post")


@dataclass
class BoundaryContext:
    ii: int                       # index of the pre-boundary item in its tier
    seg1: tuple[float, float]
    seg2: tuple[float, float]
    p: float
    windowing: str
    lab: str = ""
    lab_next: str = ""
    to: tuple[float, float] = (0.0, 0.0)   # original item times

    @property
    def bounds(self) -> list[float]:
        return [self.seg1[0], self.seg1[1], self.seg2[0], self.seg2[1]]


def _chunk_of(t: float, chunks: list[tuple[float, float]] | None):
    if not chunks:
        return None
    for c in chunks:
        if c[0] - SAMPLE_EPS <= t <= c[1] + SAMPLE_EPS:
            return c
    return None


def _pairs(tier: Tier, pause_label: str):
    """(index, pre item, post item, boundary_pre, boundary_post) per boundary."""
    if tier.is_event:
        st = tier.items
        for i in range(1, len(st) - 1):
            yield (i, st[i], st[i + 1], (st[i - 1].t_start, st[i].t_start),
                   (st[i].t_start, st[i + 1].t_start))
        return
    idx = [i for i, it in enumerate(tier.items) if not is_pause(it.label, pause_label)]
    for a, b in zip(idx[:-1], idx[1:]):
        i1, i2 = tier.items[a], tier.items[b]
        yield a, i1, i2, (i1.t_start, i1.t_end), (i2.t_start, i2.t_end)


def make_contexts(tier: Tier, mode: str, win_len: float = 1.0,
                  chunks: list[tuple[float, float]] | None = None, cross_chunk: bool = True,
                  point_win: float = 0.3, duration: float | None = None,
                  pause_label: str = "<P>") -> list[BoundaryContext]:
    """Pre- and post-boundary ranges for every boundary of a tier."""
    if duration is None:
        duration = tier.items[-1].t_end if tier.items else 0.0
    out = []
    for i, it1, it2, s1, s2 in _pairs(tier, pause_label):
        p = 0.0 if tier.is_event else max(0.0, s2[0] - s1[1])
        b1, b2 = s1[1], s2[0]
        lo, hi = 0.0, duration
        c = _chunk_of(b1, chunks)
        same_chunk = c is not None and _chunk_of(b2, chunks) == c
        if chunks and not cross_chunk:
            if mode == "std" and not same_chunk:
                continue
            if c is not None:
                lo, hi = c[0], c[1]
            c2 = _chunk_of(b2, chunks)
            if c2 is not None:
                hi = c2[1]
        if mode == "std":
            seg1, seg2 = s1, s2
        elif mode == "win":
            half = (point_win if tier.is_event else win_len) / 2.0
            seg1 = (max(lo, b1 - half), b1)
            seg2 = (b2, min(hi, b2 + half))
        elif mode == "trend":
            seg1, seg2 = (lo, b1), (b2, hi)
        else:
            raise ValueError(f"unknown boundary windowing {mode!r}")
        lab_next = it2.label
        out.append(BoundaryContext(i, seg1, seg2, p, mode, it1.label, lab_next,
                                   (it1.t_start, it1.t_end)))
    return out


def sample_index(t: np.ndarray, on: float, off: float) -> np.ndarray:
    """Samples in [on, off); the nearest sample if the range catches none."""
    idx = np.flatnonzero((t >= on - SAMPLE_EPS) & (t < off - SAMPLE_EPS))
    if len(idx) == 0 and len(t):
        idx = np.array([int(np.argmin(np.abs(t - 0.5 * (on + off))))])
    return idx


def aic(rss: float, n: int, k: int = AIC_K) -> float:
    return 2.0 * k + n * math.log(max(rss, 1e-12))


def aic_increase(rss_joint: float, rss_sep: float, n: int, k: int = AIC_K) -> float:
    """AIC of one joint line minus AIC of two separate lines over the same n points."""
    # term-wise difference keeps the parameter penalty exact for equal RSS
    fit = math.log(max(rss_joint, 1e-12)) - math.log(max(rss_sep, 1e-12))
    return 2.0 * (k - 2 * k) + n * fit


def corr_distance(a: np.ndarray, b: np.ndarray) -> float:
    """(1 - r) / 2 with r the Pearson correlation; flat inputs handled explicitly."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    fa, fb = np.std(a) < 1e-9, np.std(b) < 1e-9
    if fa and fb:
        r = 1.0
    elif fa or fb:
        r = 0.0
    else:
        r = float(np.corrcoef(a, b)[0, 1])
    return float(min(1.0, max(0.0, (1.0 - r) / 2.0)))


def _rmsd(a, b) -> float:
    d = np.asarray(a) - np.asarray(b)
    return float(np.sqrt(np.mean(d * d))) if len(d) else 0.0


def _seq_values(seq: reg.MedianSequence, kind: str) -> np.ndarray:
    return seq.tl - seq.bl if kind == "rng" else getattr(seq, kind)


def discontinuity(ctx: BoundaryContext, y: np.ndarray, t: np.ndarray, decl_win: float,
                  prct_bl: float, prct_tl: float, nrm_rng=(0.0, 1.0), fs: float = 100) -> dict:
    """Discontinuity features for all four register lines plus pause length."""
    i1 = sample_index(t, *ctx.seg1)
    i2 = sample_index(t, *ctx.seg2)
    i12 = np.union1d(i1, i2)
    out = {"p": ctx.p}
    if len(i1) < 2 or len(i2) < 2:
        logger.info("boundary %d: segment too short for register fitting", ctx.ii)
        for kind in reg.LINES:
            out[kind] = {f: None for f in FEATURES}
        return out
    f1 = reg.stylize(y[i1], t[i1], decl_win, prct_bl, prct_tl, nrm_rng, fs)
    f2 = reg.stylize(y[i2], t[i2], decl_win, prct_bl, prct_tl, nrm_rng, fs)
    f12 = reg.stylize(y[i12], t[i12], decl_win, prct_bl, prct_tl, nrm_rng, fs)
    t1, t2 = t[i1], t[i2]
    b_pre, b_post = ctx.seg1[1], ctx.seg2[0]
    b = 0.5 * (b_pre + b_post)
    for kind in reg.LINES:
        l1, l2, l12 = f1[kind], f2[kind], f12[kind]
        j1, j2 = f12.value_at(kind, t1), f12.value_at(kind, t2)
        # stylization input: the median sequences of each part
        q1, q2 = f1.seq, f2.seq
        m1, m2 = _seq_values(q1, kind), _seq_values(q2, kind)
        e1 = m1 - f1.value_at(kind, q1.t)
        e2 = m2 - f2.value_at(kind, q2.t)
        ej1 = m1 - f12.value_at(kind, q1.t)
        ej2 = m2 - f12.value_at(kind, q2.t)
        rss1, rss2 = float(e1 @ e1), float(e2 @ e2)
        rssj1, rssj2 = float(ej1 @ ej1), float(ej2 @ ej2)
        n1, n2 = len(m1), len(m2)
        out[kind] = {
            "rms": _rmsd(np.concatenate([l1.y, l2.y]), np.concatenate([j1, j2])),
            "rms_pre": _rmsd(l1.y, j1),
            "rms_post": _rmsd(l2.y, j2),
            "r": float(f2.value_at(kind, b) - f1.value_at(kind, b)),
            "d_o": float(l1.y[0] - l2.y[0]),
            "d_m": float(l1.m - l2.m),
            "sd_prepost": float(l1.rate - l2.rate),
            "sd_pre": float(l12.rate - l1.rate),
            "sd_post": float(l12.rate - l2.rate),
            "corrD": corr_distance(np.concatenate([l1.y, l2.y]), np.concatenate([j1, j2])),
            "corrD_pre": corr_distance(l1.y, j1),
            "corrD_post": corr_distance(l2.y, j2),
            "rmsR": _ratio(math.sqrt((rssj1 + rssj2) / (n1 + n2)),
                           math.sqrt((rss1 + rss2) / (n1 + n2))),
            "rmsR_pre": _ratio(math.sqrt(rssj1 / n1), math.sqrt(rss1 / n1)),
            "rmsR_post": _ratio(math.sqrt(rssj2 / n2), math.sqrt(rss2 / n2)),
            "aicI": aic_increase(rssj1 + rssj2, rss1 + rss2, n1 + n2),
            "aicI_pre": aic(rssj1, n1) - aic(rss1, n1),
            "aicI_post": aic(rssj2, n2) - aic(rss2, n2),
        }
    out["decl"] = {"seg1": f1, "seg2": f2, "seg12": f12}
    return out


def _ratio(a: float, b: float) -> float:
    return (a + 1e-10) / (b + 1e-10)
