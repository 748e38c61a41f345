"""Per-channel feature extraction shared by the pipeline and augmentation."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import bnd, gnl, loc, register as reg, rhy, voice
from .annot import Item, Tier, expand_events_to_global_segments, is_pause
from .config import get
from .dsp import rms_energy
from .preproc import make_windows, window_lengths

logger = logging.getLogger(__name__)


@dataclass
class ChannelData:
    """Everything a feature extractor may need for one file channel."""
    fi: int
    ci: int
    stm: str
    t: np.ndarray
    y: np.ndarray                       # preprocessed (semitones or Hz - bv)
    bv: float
    duration: float
    chunks: list[tuple[float, float]]
    audio: np.ndarray | None = None
    fs_audio: int | None = None
    pulses: np.ndarray | None = None
    r: np.ndarray | None = None         # register residual
    globs: list[tuple[Item, np.ndarray, reg.RegisterFit]] = field(default_factory=list)
    _energy: dict = field(default_factory=dict, repr=False)

    def energy(self, win: float, sts: float, wintyp: str, winparam, scale: bool = False):
        key = (win, sts, wintyp, winparam, scale)
        if key not in self._energy:
            if self.audio is None:
                raise ValueError("energy features need audio")
            x = self.audio
            if scale:
                peak = np.max(np.abs(x)) if len(x) else 0.0
                x = x / peak if peak > 0 else x
            self._energy[key] = rms_energy(x, self.fs_audio, win, sts, wintyp, winparam)
        return self._energy[key]


def speech_items(tier: Tier, pause_label: str) -> list[tuple[int, Item]]:
    return [(i, it) for i, it in enumerate(tier.items) if not is_pause(it.label, pause_label)]


def chunk_of(t_on: float, t_off: float, chunks: list[tuple[float, float]]) -> int | None:
    c = 0.5 * (t_on + t_off)
    for k, (a, b) in enumerate(chunks):
        if a - 1e-6 <= c <= b + 1e-6:
            return k
    return None


def position_flags(items: list[Item], parents: list[tuple[float, float]] | None,
                   chunks: list[tuple[float, float]]) -> list[dict[str, bool]]:
    """is_init/is_fin within the parent spans and within chunks.

    Without parent spans, or for items outside all of them, the flags are False.
    """
    def flags(spans, prefix):
        owner = [chunk_of(it.t_start, it.t_end, spans) if spans else None for it in items]
        out = []
        for i, o in enumerate(owner):
            if o is None:
                out.append({f"is_init{prefix}": False, f"is_fin{prefix}": False})
                continue
            prev_same = i > 0 and owner[i - 1] == o
            next_same = i < len(owner) - 1 and owner[i + 1] == o
            out.append({f"is_init{prefix}": not prev_same, f"is_fin{prefix}": not next_same})
        return out
    a = flags(parents, "")
    b = flags(chunks, "_chunk")
    return [{**x, **y} for x, y in zip(a, b)]


def sample_idx(t: np.ndarray, on: float, off: float) -> np.ndarray:
    return bnd.sample_index(t, on, off)


# ---------------------------------------------------------------- global segments

def global_segments(tier: Tier, chunks_tier: Tier | None, pause_label: str,
                    duration: float) -> list[tuple[int, Item]]:
    if tier.is_event:
        tier = expand_events_to_global_segments(tier, chunks_tier, pause_label, duration)
    return speech_items(tier, pause_label)


def stylize_globals(ch: ChannelData, segs: list[tuple[int, Item]], cfg: dict,
                    log=None) -> list[dict]:
    """Register stylization of global segments; fills ch.globs and ch.r."""
    g = get(cfg, "styl:glob")
    mode = get(cfg, "styl:register")
    rows = []
    ch.globs = []
    ch.r = np.zeros_like(ch.y) if mode != "none" else ch.y.copy()
    for ii, it in segs:
        idx = sample_idx(ch.t, it.t_start, it.t_end)
        if len(idx) < 2:
            note(log, f"file {ch.stm} channel {ch.ci + 1}: global segment {ii} too short, skipped")
            continue
        fit = reg.stylize(ch.y[idx], ch.t[idx], g["decl_win"], g["prct"]["bl"], g["prct"]["tl"],
                          g["nrm"]["rng"], cfg["fs"])
        ch.r[idx] = reg.residual(ch.y[idx], fit, mode)
        ch.globs.append((it, idx, fit))
        row = {"ii": ii, "t_on": it.t_start, "t_off": it.t_end, "lab": it.label, "err": fit.err,
               "bv": ch.bv}
        for k in reg.LINES:
            ln = fit.lines[k]
            row.update({f"{k}_c0": float(ln.c[1]), f"{k}_c1": float(ln.c[0]),
                        f"{k}_m": ln.m, f"{k}_rate": ln.rate})
        st = gnl.describe(ch.y[idx])
        st["dur"] = it.t_end - it.t_start
        row.update(st)
        rows.append(row)
    # resets restart in every chunk
    fits = [f for _, _, f in ch.globs]
    owners = [chunk_of(it.t_start, it.t_end, ch.chunks) for it, _, _ in ch.globs]
    prev = None
    for k, (row, fit, own) in enumerate(zip(rows, fits, owners)):
        pair = [fit] if prev is None or owners[k - 1] != own else [prev, fit]
        r = reg.reset_features(pair)[-1]
        for kind in reg.LINES:
            row[f"{kind}_r"] = r[kind]
        prev = fit
    flags = position_flags([it for it, _, _ in ch.globs], [(0.0, ch.duration)], ch.chunks)
    for row, fl in zip(rows, flags):
        row.update(fl)
    return rows


def note(log, msg: str) -> None:
    if log is not None:
        log.append(msg)
    logger.warning(msg)


# ---------------------------------------------------------------- local segments

@dataclass
class LocalSpec:
    t_on: float
    t_off: float
    center: float
    case: str
    lab_acc: str = ""
    lab_ag: str = ""
    ii: int = 0


def local_specs(acc: Tier | None, ag: Tier | None, cfg: dict, point_win: float,
                pause_label: str, log=None) -> list[LocalSpec]:
    """Local analysis units from accent (event or segment) and accent group tiers."""
    align = get(cfg, "preproc:loc_align")
    out = []
    if ag is not None:
        for ii, it in speech_items(ag, pause_label):
            if acc is None:
                out.append(LocalSpec(it.t_start, it.t_end, it.center, "segment", "", it.label, ii))
                continue
            inside = [a for a in acc.items if it.t_start <= a.center <= it.t_end
                      and not is_pause(a.label, pause_label)]
            c = loc.align_centers([a.center for a in inside], align)
            if c is None:
                if inside:
                    note(log, f"accent group {ii}: {len(inside)} centers, skipped ({align})")
                continue
            lab = next(a.label for a in inside if a.center == c)
            out.append(LocalSpec(it.t_start, it.t_end, c, "both", lab, it.label, ii))
        return out
    if acc is None:
        return out
    for ii, it in speech_items(acc, pause_label):
        if it.is_event:
            out.append(LocalSpec(it.t_start - point_win / 2, it.t_start + point_win / 2,
                                 it.t_start, "event", it.label, "", ii))
        else:
            out.append(LocalSpec(it.t_start, it.t_end, it.center, "segment", it.label, "", ii))
    return out


def local_features(ch: ChannelData, spec: LocalSpec, cfg: dict, ext: bool,
                   nrm_win: float, log=None) -> dict | None:
    """Nested local features (acc, decl, gnl, gst) for one local unit."""
    spans = [(it.t_start, it.t_end) for it, _, _ in ch.globs]
    on, off = spec.t_on, spec.t_off
    gi = loc.parent_index(on, off, spans) if spec.case != "event" else None
    if spec.case == "event":
        # event windows are clipped to the global segment holding the stamp
        gi = loc.parent_index(spec.center, spec.center, spans)
        if gi is not None:
            on, off = max(on, spans[gi][0]), min(off, spans[gi][1])
    if gi is None:
        note(log, f"file {ch.stm} channel {ch.ci + 1}: local unit {spec.ii} "
                   "not inside one global segment, skipped")
        return None
    order = int(get(cfg, "styl:loc:ord"))
    idx = sample_idx(ch.t, on, off)
    if len(idx) < order + 1 or len(idx) < 2:
        note(log, f"file {ch.stm} channel {ch.ci + 1}: local unit {spec.ii} too short, skipped")
        return None
    t = ch.t[idx]
    rng = get(cfg, "styl:loc:nrm:rng")
    if spec.case == "both":
        tn = loc.normalize_time(t, t[0], t[-1], spec.center, "both")
    else:
        tn = loc.normalize_time(t, t[0], t[-1], None, spec.case, rng)
    r = ch.r[idx]
    pf = loc.fit_local(r, tn, order)
    g = get(cfg, "styl:glob")
    decl = reg.stylize(ch.y[idx], t, g["decl_win"], g["prct"]["bl"], g["prct"]["tl"],
                       g["nrm"]["rng"], cfg["fs"])
    nw = make_windows(Item("", on, off), "nrm", 0.0, nrm_win, spans[gi])
    nidx = sample_idx(ch.t, nw.t_on, nw.t_off)
    stats = gnl.standard_stats(ch.y[idx], ch.y[nidx], dur=off - on,
                               dur_nrm_ctx=nw.t_off - nw.t_on)
    out = {"t_on": on, "t_off": off, "gi": gi, "idx": idx, "tn": tn, "poly": pf,
           "rms_fit": float(np.sqrt(np.mean((pf.y - r) ** 2))),
           "acc": {"c": pf.c}, "decl": decl, "gnl_f0": stats}
    if ext:
        out["gst"] = loc.gestalt(ch.y[idx], t, tn, decl, ch.globs[gi][2], order)
    return out


def flatten_local(feat: dict) -> dict:
    row = {"t_on": feat["t_on"], "t_off": feat["t_off"], "gi": feat["gi"]}
    row.update(loc.coef_dict(feat["acc"]["c"]))
    decl = feat["decl"]
    for k in reg.LINES:
        ln = decl.lines[k]
        row.update({f"{k}_c0": float(ln.c[1]), f"{k}_c1": float(ln.c[0]),
                    f"{k}_m": ln.m, f"{k}_rate": ln.rate})
    row["err"] = decl.err
    row.update(feat["gnl_f0"])
    if "gst" in feat:
        for k in reg.LINES:
            for name, v in feat["gst"][k].items():
                row[f"{k}_{name}"] = v
            row.update(loc.coef_dict(feat["gst"]["residual"][k]["c"], f"res_{k}_c"))
    return row


# ---------------------------------------------------------------- gnl

def analysis_windows(it: Item, point_win: float, nrm_win: float,
                     chunks: list[tuple[float, float]], duration: float):
    k = chunk_of(it.t_start, it.t_end, chunks)
    parent = chunks[k] if k is not None else (0.0, duration)
    aw = make_windows(it, "point", point_win, nrm_win, parent)
    nw = make_windows(it, "nrm", point_win, nrm_win, parent)
    return aw, nw


def gnl_contour_features(v: np.ndarray, tg: np.ndarray, aw, nw, fs_grid: float,
                         qwin: float) -> dict | None:
    idx = sample_idx(tg, aw.t_on, aw.t_off)
    nidx = sample_idx(tg, nw.t_on, nw.t_off)
    if len(idx) < 2:
        return None
    seg = v[idx]
    out = gnl.standard_stats(seg, v[nidx], dur=aw.t_off - aw.t_on, dur_nrm_ctx=nw.t_off - nw.t_on)
    out.update(gnl.part_quotients(seg, fs_grid, qwin))
    out.update(gnl.shape_poly(seg))
    return out


def gnl_f0_features(ch: ChannelData, it: Item, cfg: dict) -> dict | None:
    pw, nw_len = window_lengths(cfg["preproc"], "gnl_f0")
    aw, nw = analysis_windows(it, pw, nw_len, ch.chunks, ch.duration)
    out = gnl_contour_features(ch.y, ch.t, aw, nw, cfg["fs"], get(cfg, "styl:gnl:win"))
    if out is not None:
        out.update({"t_on": aw.t_on, "t_off": aw.t_off})
    return out


def gnl_en_features(ch: ChannelData, it: Item, cfg: dict) -> dict | None:
    s = get(cfg, "styl:gnl_en")
    pw, nw_len = window_lengths(cfg["preproc"], "gnl_en")
    aw, nw = analysis_windows(it, pw, nw_len, ch.chunks, ch.duration)
    en = ch.energy(s["win"], s["sts"], s["wintyp"], s["winparam"])
    out = gnl_contour_features(en.e, en.t, aw, nw, 1.0 / s["sts"], get(cfg, "styl:gnl:win"))
    if out is None:
        return None
    fs = ch.fs_audio
    a0, a1 = int(round(aw.t_on * fs)), int(round(aw.t_off * fs))
    n0, n1 = int(round(nw.t_on * fs)), int(round(nw.t_off * fs))
    x, xn = ch.audio[a0:a1], ch.audio[n0:n1]
    rms = float(np.sqrt(np.mean(x * x))) if len(x) else math.nan
    rms_n = float(np.sqrt(np.mean(xn * xn))) if len(xn) else math.nan
    out["rms"] = rms
    out["rms_nrm"] = rms / rms_n if rms_n and np.isfinite(rms_n) else math.nan
    sb = get(cfg, "styl:gnl:sb")
    out["sb"] = gnl.spectral_balance(x, fs, gnl.SpectralBalanceSpec(
        sb["domain"], sb["alpha"], sb["win"], sb["btype"], sb["f"]))
    out.update({"t_on": aw.t_on, "t_off": aw.t_off})
    return out


# ---------------------------------------------------------------- rhythm

def rhythm_features(v: np.ndarray, tg: np.ndarray, fs_grid: float, on: float, off: float,
                    spec: rhy.RhythmSpec, rate_tiers: dict[str, Tier | None]) -> dict | None:
    idx = sample_idx(tg, on, off)
    if len(idx) < 4:
        return None
    res = rhy.rhythm_spectrum(v[idx], fs_grid, spec)
    out = res.features()
    for name, tier in rate_tiers.items():
        if tier is None:
            for k in ("rate", "prop", "mae", "dgm", "dlm"):
                out[f"{name}_{k}"] = math.nan
            continue
        rate = rhy.event_rate(tier.items, on, off)
        for k, val in rhy.rate_influence(res, rate, spec.rb).items():
            out[f"{name}_{k}"] = val
    return out


# ---------------------------------------------------------------- boundaries

def boundary_features(ch: ChannelData, tier: Tier, cfg: dict, modes: list[str],
                      pause_label: str, contour: np.ndarray | None = None) -> dict[int, dict]:
    """Nested discontinuity features keyed by pre-boundary item index."""
    b = get(cfg, "styl:bnd")
    pw, _ = window_lengths(cfg["preproc"], "bnd")
    y = ch.y if contour is None else contour
    out: dict[int, dict] = {}
    for mode in modes:
        ctxs = bnd.make_contexts(tier, mode, b["win"], ch.chunks, bool(b["cross_chunk"]),
                                 pw, ch.duration, pause_label)
        for ctx in ctxs:
            d = bnd.discontinuity(ctx, y, ch.t, b["decl_win"], b["prct"]["bl"], b["prct"]["tl"],
                                  b["nrm"]["rng"], cfg["fs"])
            d.pop("decl", None)
            row = out.setdefault(ctx.ii, {"ctx": ctx, "lab": ctx.lab, "lab_next": ctx.lab_next})
            row[mode] = d
            row[f"bounds_{mode}"] = ctx.bounds
    return out


def flatten_boundary(d: dict) -> dict:
    row = {}
    for mode in ("std", "win", "trend"):
        if mode not in d:
            continue
        row[f"{mode}_p"] = d[mode]["p"]
        for k in reg.LINES:
            for f, v in d[mode][k].items():
                row[f"{mode}_{k}_{f}"] = v
    return row


# ---------------------------------------------------------------- voice

def voice_item_features(ch: ChannelData, on: float, off: float, cfg: dict) -> dict | None:
    if ch.pulses is None:
        return None
    j = get(cfg, "styl:voice:jit")
    p = ch.pulses[(ch.pulses >= on) & (ch.pulses < off)]
    if len(p) < 3:
        return None
    return voice.voice_features(p, ch.audio, ch.fs_audio, j["t_min"], j["t_max"], j["fac_max"])
