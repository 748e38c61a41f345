"""Batch driver: stage planning, per-file work, corpus barriers, resume and export."""
from __future__ import annotations

import copy
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import augment as aug
from . import export as ex
from . import features as ft
from . import gnl
from .annot import Annotation, Item, Tier, chunk_spans, is_pause, read_annotation, \
    save_annotation
from .cluster import cluster
from .config import ConfigError, _as_list, expand_tier_names, get, navigation_violations, \
    tier_channel
from .loc import resynthesize
from .preproc import base_value, from_semitones, preprocess_channel, voiced_values, \
    window_lengths
from .register import LINES
from .rhy import RhythmSpec
from .sigio import derive_grouping, list_files, match_files, read_f0_file, read_pulse_file, \
    read_wav

logger = logging.getLogger(__name__)

AUGMENT_STAGES = ("augment_chunk", "augment_syl", "augment_glob", "augment_loc")
STYL_STAGES = ("styl_glob", "styl_loc", "styl_loc_ext", "styl_gnl_f0", "styl_gnl_en",
               "styl_bnd", "styl_bnd_win", "styl_bnd_trend", "styl_rhy_f0", "styl_rhy_en",
               "styl_voice")
STAGES = AUGMENT_STAGES + ("preproc",) + STYL_STAGES + ("clst_glob", "clst_loc", "export")
# feature tables each stylization stage writes
STAGE_SETS = {
    "styl_glob": ("glob",), "styl_loc": ("loc",), "styl_loc_ext": ("loc",),
    "styl_gnl_f0": ("gnl_f0", "gnl_f0_file"), "styl_gnl_en": ("gnl_en", "gnl_en_file"),
    "styl_bnd": ("bnd",), "styl_bnd_win": ("bnd_win",), "styl_bnd_trend": ("bnd_trend",),
    "styl_rhy_f0": ("rhy_f0", "rhy_f0_file"), "styl_rhy_en": ("rhy_en", "rhy_en_file"),
    "styl_voice": ("voice", "voice_file"),
}
BND_MODES = {"styl_bnd": ("std", "bnd"), "styl_bnd_win": ("win", "bnd_win"),
             "styl_bnd_trend": ("trend", "bnd_trend")}


class InputError(OSError):
    """Missing or unreadable input location."""


# ---------------------------------------------------------------- files

@dataclass
class FileInfo:
    fi: int
    stm: str
    annot: Path | None
    f0: Path | None = None
    aud: Path | None = None
    pulse: Path | None = None
    grp: dict = field(default_factory=dict)


def resolve_dir(d: str, base: Path) -> Path | None:
    if not d:
        return None
    p = Path(d)
    return p if p.is_absolute() else base / p


def discover(cfg: dict, base: Path, need: set[str]) -> list[FileInfo]:
    """Pair input files across sources by sorted position."""
    lists = {}
    dirs = {}
    for src in ("annot", "f0", "aud", "pulse"):
        d = resolve_dir(get(cfg, f"fsys:{src}:dir"), base)
        dirs[src] = d
        if d is None:
            if src in need:
                raise InputError(f"fsys:{src}:dir is required for the requested stages")
            continue
        if not d.is_dir():
            if src == "annot" and "annot" not in need:
                d.mkdir(parents=True, exist_ok=True)
            else:
                raise InputError(f"input directory not found: {d}")
        lists[src] = list_files(d, get(cfg, f"fsys:{src}:ext"))
        if src in need and not lists[src]:
            raise InputError(f"no *.{get(cfg, f'fsys:{src}:ext')} files in {d}")
    rows = match_files(lists)
    out = []
    labels = _as_list(get(cfg, "fsys:grp:lab"))
    for fi, row in enumerate(rows):
        first = row.get("annot") or row.get("f0") or row.get("aud") or row.get("pulse")
        stm = first.stem
        annot = row.get("annot")
        if annot is None and dirs["annot"] is not None:
            annot = dirs["annot"] / f"{stm}.{get(cfg, 'fsys:annot:ext')}"
        src = row.get(get(cfg, "fsys:grp:src")) or first
        grp = {f"grp_{k}": v for k, v in
               derive_grouping(src.stem, get(cfg, "fsys:grp:sep"), labels).items()}
        out.append(FileInfo(fi, stm, annot, row.get("f0"), row.get("aud"), row.get("pulse"), grp))
    return out


def load_annotation(info: FileInfo, cfg: dict) -> Annotation:
    if info.annot is not None and info.annot.is_file():
        return read_annotation(info.annot, get(cfg, "fsys:annot:typ"))
    return Annotation()


def channel_tiers(cfgx: dict, fieldpath: str, ci: int) -> list[str]:
    """Tiers of a tier field bound to channel ci; unbound tiers count as channel 0."""
    out = []
    for t in _as_list(get(cfgx, fieldpath)):
        c = tier_channel(cfgx, t)
        if (0 if c is None else c) == ci:
            out.append(t)
    return out


def first_tier(a: Annotation, cfgx: dict, fieldpath: str, ci: int) -> Tier | None:
    for name in channel_tiers(cfgx, fieldpath, ci):
        if name in a.tiers:
            return a.tiers[name]
    return None


def _guarded(job: dict) -> dict:
    """Run one per-file job; input failures skip the file instead of the run."""
    try:
        return job["fn"](job)
    except ConfigError:
        raise
    except (ValueError, OSError) as e:
        msg = f"file {job['info'].stm}: {e}; file skipped"
        logger.warning(msg)
        return {"sets": {}, "channels": [], "log": [msg], "failed": True}


def _map(fn, jobs: list, n_jobs: int) -> list:
    jobs = [{**j, "fn": fn} for j in jobs]
    if n_jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(_guarded, jobs))
    return [_guarded(j) for j in jobs]


# ---------------------------------------------------------------- preprocessing

def run_preproc(files: list[FileInfo], cfg: dict, log: list[str]) -> list[dict]:
    """Base values (pooled over grouping levels) and preprocessed contours per file."""
    pp = cfg["preproc"]
    tracks, voiced = [], {}
    grp_var = {str(k): v for k, v in pp.get("base_prct_grp", {}).items()}
    keys = []
    for info in files:
        tr = read_f0_file(info.f0)
        tracks.append(tr)
        fk = []
        for ci, y in enumerate(tr.y_hz):
            var = grp_var.get(str(ci + 1))
            level = info.grp.get(f"grp_{var}") if var else None
            key = ("grp", level) if level is not None else ("file", info.fi, ci)
            fk.append(key)
            voiced.setdefault(key, []).append(voiced_values(y, pp) if np.any(y > 0)
                                              else np.zeros(0))
        keys.append(fk)
    bvs = {k: base_value(np.concatenate(v), pp["base_prct"]) for k, v in voiced.items()}
    out = []
    for info, tr, fk in zip(files, tracks, keys):
        chans = []
        for ci, y in enumerate(tr.y_hz):
            bv = bvs[fk[ci]]
            if not np.any(y > 0):
                ft.note(log, f"file {info.stm} channel {ci + 1}: no voiced f0, channel skipped")
                chans.append({"bv": bv, "y": None})
                continue
            chans.append({"bv": bv, "y": preprocess_channel(y, bv, pp)})
        out.append({"stm": info.stm, "t": tr.t, "channels": chans})
    return out


# ---------------------------------------------------------------- stylization

def _channel_data(info: FileInfo, ci: int, f0: dict, a: Annotation, cfgx: dict,
                  audio, pulses, pau: str) -> ft.ChannelData:
    t = np.asarray(f0["t"], dtype=float)
    ch0 = f0["channels"][ci]
    y = np.asarray(ch0["y"], dtype=float)
    dur = max(a.duration, float(t[-1]) + 0.01 if len(t) else 0.0,
              audio.duration if audio is not None else 0.0)
    ctier = first_tier(a, cfgx, "fsys:chunk:tier", ci)
    chunks = chunk_spans(ctier, dur, pau)
    x = fs = None
    if audio is not None:
        x = audio.channels[min(ci, len(audio.channels) - 1)]
        fs = audio.sample_rate
    p = None
    if pulses is not None and pulses.stamps:
        p = pulses.stamps[min(ci, len(pulses.stamps) - 1)]
    return ft.ChannelData(info.fi, ci, info.stm, t, y, float(ch0["bv"]), dur, chunks, x, fs, p)


def _prov(info: FileInfo, ci: int, tier: str, row: dict) -> dict:
    out = {"fi": info.fi, "ci": ci, "stm": info.stm, "tier": tier}
    out.update(info.grp)
    out.update(row)
    return out


def _item_rows(items: list[tuple[int, Item]], parents, chunks) -> list[dict]:
    flags = ft.position_flags([it for _, it in items], parents, chunks)
    return [{"ii": ii, "lab": it.label, **fl} for (ii, it), fl in zip(items, flags)]


def styl_file(job: dict) -> dict:
    """All requested stylization sets for one file."""
    info: FileInfo = job["info"]
    cfg = job["cfg"]
    stages = set(job["stages"])
    f0 = job["f0"]
    log: list[str] = []
    pau = get(cfg, "fsys:label:pau")
    a = load_annotation(info, cfg)
    n_ch = len(f0["channels"])
    cfgx = expand_tier_names(cfg, max(n_ch, 1))
    need_audio = bool(stages & {"styl_gnl_en", "styl_rhy_en", "styl_voice"})
    audio = read_wav(info.aud) if need_audio and info.aud is not None else None
    if need_audio and audio is None:
        ft.note(log, f"file {info.stm}: no audio, energy and voice features skipped")
    pulses = read_pulse_file(info.pulse) if "styl_voice" in stages and info.pulse else None
    sets: dict[str, list[dict]] = {}
    chans = []
    for ci in range(n_ch):
        if f0["channels"][ci]["y"] is None:
            chans.append({})
            continue
        ch = _channel_data(info, ci, f0, a, cfgx, audio, pulses, pau)
        extra = _styl_channel(info, ch, a, cfgx, stages, sets, log, pau)
        chans.append(extra)
    return {"sets": sets, "channels": chans, "log": log}


def _styl_channel(info, ch: ft.ChannelData, a: Annotation, cfg: dict, stages: set,
                  sets: dict, log: list[str], pau: str) -> dict:
    ci = ch.ci
    extra: dict = {}
    gtier = first_tier(a, cfg, "fsys:glob:tier", ci)
    ctier = first_tier(a, cfg, "fsys:chunk:tier", ci)
    loc_on = bool(stages & {"styl_loc", "styl_loc_ext"})
    parents = None
    if gtier is not None:
        segs = ft.global_segments(gtier, ctier, pau, ch.duration)
        rows = ft.stylize_globals(ch, segs, cfg, log)
        parents = [(it.t_start, it.t_end) for it, _, _ in ch.globs]
        if "styl_glob" in stages:
            sets.setdefault("glob", []).extend(_prov(info, ci, gtier.name, r) for r in rows)
    elif loc_on or get(cfg, "styl:bnd:residual"):
        # chunks stand in for global segments
        segs = [(k, Item("x", s0, s1)) for k, (s0, s1) in enumerate(ch.chunks)]
        ft.stylize_globals(ch, segs, cfg, log)
    if ch.r is not None:
        extra["r"] = ch.r
    if loc_on:
        _loc_rows(info, ch, a, cfg, stages, sets, log, pau, parents, extra)
    for stage, (mode, set_name) in BND_MODES.items():
        if stage not in stages:
            continue
        contour = ch.r if get(cfg, "styl:bnd:residual") and ch.r is not None else ch.y
        for name in channel_tiers(cfg, "fsys:bnd:tier", ci):
            tier = a.tiers.get(name)
            if tier is None:
                continue
            d = ft.boundary_features(ch, tier, cfg, [mode], pau, contour)
            items = [(ii, tier.items[ii]) for ii in sorted(d)]
            base = _item_rows(items, parents, ch.chunks)
            for b, ii in zip(base, sorted(d)):
                ctx = d[ii]["ctx"]
                row = {**b, "lab_next": d[ii]["lab_next"], "t_off": ctx.seg1[1],
                       "t_on": ctx.seg2[0], "p": d[ii][mode]["p"]}
                for k in LINES:
                    for f, v in d[ii][mode][k].items():
                        row[f"{k}_{f}"] = v
                sets.setdefault(set_name, []).append(_prov(info, ci, name, row))
    if "styl_gnl_f0" in stages:
        _gnl_rows(info, ch, a, cfg, "gnl_f0", sets, parents, pau)
        row = gnl.file_level(ch.y, cfg["fs"], get(cfg, "styl:gnl:win"))
        row.update({"bv": ch.bv, "t_on": 0.0, "t_off": ch.duration})
        sets.setdefault("gnl_f0_file", []).append(_prov(info, ci, "", row))
    if "styl_gnl_en" in stages and ch.audio is not None:
        _gnl_rows(info, ch, a, cfg, "gnl_en", sets, parents, pau)
        s = get(cfg, "styl:gnl_en")
        en = ch.energy(s["win"], s["sts"], s["wintyp"], s["winparam"])
        row = gnl.file_level(en.e, 1.0 / s["sts"], get(cfg, "styl:gnl:win"))
        row.update({"rms": float(np.sqrt(np.mean(ch.audio ** 2))), "t_on": 0.0,
                    "t_off": ch.duration})
        sets.setdefault("gnl_en_file", []).append(_prov(info, ci, "", row))
    for key in ("rhy_f0", "rhy_en"):
        if f"styl_{key}" in stages and (key == "rhy_f0" or ch.audio is not None):
            _rhy_rows(info, ch, a, cfg, key, sets, parents, pau)
    if "styl_voice" in stages and ch.pulses is not None:
        pw, _ = window_lengths(cfg["preproc"], "voice")
        for name in channel_tiers(cfg, "fsys:voice:tier", ci):
            tier = a.tiers.get(name)
            if tier is None:
                continue
            items = ft.speech_items(tier, pau)
            for b, (ii, it) in zip(_item_rows(items, parents, ch.chunks), items):
                on, off = _window(it, pw, ch)
                v = ft.voice_item_features(ch, on, off, cfg)
                if v is None:
                    ft.note(log, f"file {ch.stm} channel {ci + 1} tier {name} item {ii}: "
                               "too few pulses, skipped")
                    continue
                sets.setdefault("voice", []).append(
                    _prov(info, ci, name, {**b, "t_on": on, "t_off": off, **v}))
        v = ft.voice_item_features(ch, 0.0, ch.duration + 1.0, cfg)
        if v is not None:
            sets.setdefault("voice_file", []).append(
                _prov(info, ci, "", {"t_on": 0.0, "t_off": ch.duration, **v}))
    if get(cfg, "preproc:loc_sync") and loc_on:
        _loc_sync(sets, info.fi, ci)
    return extra


def _window(it: Item, point_win: float, ch: ft.ChannelData) -> tuple[float, float]:
    if not it.is_event:
        return it.t_start, it.t_end
    k = ft.chunk_of(it.t_start, it.t_start, ch.chunks)
    lo, hi = ch.chunks[k] if k is not None else (0.0, ch.duration)
    return max(lo, it.t_start - point_win / 2), min(hi, it.t_start + point_win / 2)


def _loc_rows(info, ch, a, cfg, stages, sets, log, pau, parents, extra) -> None:
    ci = ch.ci
    acc = first_tier(a, cfg, "fsys:loc:tier_acc", ci)
    ag = first_tier(a, cfg, "fsys:loc:tier_ag", ci)
    if acc is None and ag is None:
        return
    pw, nw = window_lengths(cfg["preproc"], "loc")
    specs = ft.local_specs(acc, ag, cfg, pw, pau, log)
    name = acc.name if acc is not None else ag.name
    ext = "styl_loc_ext" in stages
    rms, locals_ = [], []
    feats = []
    for spec in specs:
        f = ft.local_features(ch, spec, cfg, ext, nw, log)
        if f is None:
            continue
        feats.append((spec, f))
        rms.append(f["rms_fit"])
        locals_.append((f["idx"], f["poly"], f["gi"]))
    items = [Item(s.lab_acc or s.lab_ag, f["t_on"], f["t_off"]) for s, f in feats]
    flags = ft.position_flags(items, parents, ch.chunks)
    for (spec, f), fl in zip(feats, flags):
        row = ft.flatten_local(f)
        row.update({"ii": spec.ii, "lab": spec.lab_acc or spec.lab_ag, "lab_acc": spec.lab_acc,
                    "lab_ag": spec.lab_ag, **fl})
        sets.setdefault("loc", []).append(_prov(info, ci, name, row))
    extra["loc_rms"] = rms
    mode = get(cfg, "styl:register")
    globals_ = [(idx, fit) for _, idx, fit in ch.globs]
    extra["resyn"] = resynthesize(ch.y, globals_, locals_, mode, ch.bv,
                                  bool(get(cfg, "preproc:st")))


def _gnl_rows(info, ch, a, cfg, key, sets, parents, pau) -> None:
    fn = ft.gnl_f0_features if key == "gnl_f0" else ft.gnl_en_features
    for name in channel_tiers(cfg, f"fsys:{key}:tier", ch.ci):
        tier = a.tiers.get(name)
        if tier is None:
            continue
        items = ft.speech_items(tier, pau)
        for b, (ii, it) in zip(_item_rows(items, parents, ch.chunks), items):
            f = fn(ch, it, cfg)
            if f is not None:
                sets.setdefault(key, []).append(_prov(info, ch.ci, name, {**b, **f}))


def _rhy_rows(info, ch, a, cfg, key, sets, parents, pau) -> None:
    spec = RhythmSpec.from_cfg(get(cfg, f"styl:{key}:rhy"))
    if key == "rhy_f0":
        v, tg, fs = ch.y, ch.t, cfg["fs"]
    else:
        s = get(cfg, "styl:rhy_en:sig")
        en = ch.energy(s["win"], s["sts"], s["wintyp"], s["winparam"], bool(s.get("scale", 0)))
        v, tg, fs = en.e, en.t, 1.0 / s["sts"]
    rate_tiers = {}
    for name in _as_list(get(cfg, f"fsys:{key}:tier_rate")):
        c = tier_channel(cfg, name)
        rate_tiers[name] = a.tiers.get(name) if (0 if c is None else c) == ch.ci else None
    pw, _ = window_lengths(cfg["preproc"], key)
    for name in channel_tiers(cfg, f"fsys:{key}:tier", ch.ci):
        tier = a.tiers.get(name)
        if tier is None:
            continue
        items = ft.speech_items(tier, pau)
        for b, (ii, it) in zip(_item_rows(items, parents, ch.chunks), items):
            on, off = _window(it, pw, ch)
            f = ft.rhythm_features(v, tg, fs, on, off, spec, rate_tiers)
            if f is not None:
                sets.setdefault(key, []).append(
                    _prov(info, ch.ci, name, {**b, "t_on": on, "t_off": off, **f}))
    f = ft.rhythm_features(v, tg, fs, 0.0, ch.duration + 1.0, spec, rate_tiers)
    if f is not None:
        sets.setdefault(f"{key}_file", []).append(
            _prov(info, ch.ci, "", {"t_on": 0.0, "t_off": ch.duration, **f}))


def _loc_sync(sets: dict, fi: int, ci: int) -> None:
    spans = [(r["t_on"], r["t_off"]) for r in sets.get("loc", []) if r["fi"] == fi and r["ci"] == ci]
    for key in ("gnl_f0", "gnl_en", "rhy_f0", "rhy_en"):
        if key not in sets:
            continue
        sets[key] = [r for r in sets[key] if r["fi"] != fi or r["ci"] != ci or
                     any(min(r["t_off"], b) - max(r["t_on"], a) > 0 for a, b in spans)]


# ---------------------------------------------------------------- augmentation

def augment_signal_file(job: dict) -> dict:
    """Chunk and syllable tiers for one file, written back to its annotation."""
    info, cfg, stages = job["info"], job["cfg"], job["stages"]
    audio = read_wav(info.aud)
    a = load_annotation(info, cfg)
    a.duration = max(a.duration, audio.duration)
    cfgx = expand_tier_names(cfg, len(audio.channels))
    pau = get(cfg, "fsys:label:pau")
    for ci, x in enumerate(audio.channels):
        if "augment_chunk" in stages:
            s = aug.ChunkSettings.from_cfg(get(cfg, "augment:chunk"))
            name = f"{get(cfg, 'fsys:augment:chunk:tier_out_stm')}_{ci + 1}"
            a.add(aug.detect_chunks(x, audio.sample_rate, s, name, pau,
                                    get(cfg, "fsys:label:chunk"), ci + 1))
        if "augment_syl" in stages:
            s = aug.SylSettings.from_cfg(get(cfg, "augment:syl"))
            parent = first_tier(a, cfgx, "fsys:augment:syl:tier_parent", ci)
            spans = chunk_spans(parent, audio.duration, pau) if parent is not None else None
            stm = get(cfg, "fsys:augment:syl:tier_out_stm")
            nuc, bnd = aug.detect_syllables(x, audio.sample_rate, spans, s,
                                            (f"{stm}_{ci + 1}", f"{stm}_bnd_{ci + 1}"),
                                            get(cfg, "fsys:label:syl"), ci + 1)
            a.add(nuc)
            a.add(bnd)
    save_annotation(a, info.annot, get(cfg, "fsys:annot:typ"))
    return {"log": []}


def _aug_channel(info: FileInfo, f0: dict, ci: int, a: Annotation, cfgx: dict,
                 audio, pau: str) -> ft.ChannelData:
    ch = _channel_data(info, ci, f0, a, cfgx, audio, None, pau)
    return ch


def glob_candidates(ch: ft.ChannelData, tier: Tier, parent: Tier | None, cfg: dict,
                    pau: str) -> tuple[aug.CandidateSet, list[tuple[float, float]]]:
    acfg = get(cfg, "augment:glob")
    ch.chunks = chunk_spans(parent, ch.duration, pau) if parent is not None \
        else [(0.0, ch.duration)]
    modes = [m for m in ("std", "win", "trend") if m in acfg["wgt"]]
    if not modes:
        raise ConfigError("augment:glob:wgt: select features below std, win or trend")
    if tier.is_event:
        edges = sorted({round(e, 9) for span in ch.chunks for e in span})
        real = sorted({round(it.t_start, 9) for it in tier.items if not is_pause(it.label, pau)})
        stamps = sorted(set(edges) | set(real))
        is_real = [s in set(real) and s not in set(edges) for s in stamps]
        work = Tier(tier.name, "event", [Item("x", s, s) for s in stamps], tier.channel)
    else:
        work = tier
        is_real = [True] * len(tier.items)
    d = ft.boundary_features(ch, work, cfg, modes, pau)
    keys = [k for k in sorted(d) if is_real[k]]
    ctxs = [d[k]["ctx"] for k in keys]
    times = np.array([c.seg1[1] for c in ctxs])
    feats = [{m: d[k][m] for m in modes if m in d[k]} for k in keys]
    cs = aug.CandidateSet(ch.fi, ch.ci, times, feats)
    if not tier.is_event:
        pauses = [it for it in tier.items if is_pause(it.label, pau)]
        if parent is not None:
            pauses += [it for it in parent.items if is_pause(it.label, pau)]
        cs.pos_seeds, cs.neg_seeds = aug.boundary_seeds(ctxs, pauses, float(acfg["min_l"]))
        cs.seedable = True
        cs.pre_dur = np.array([c.to[1] - c.to[0] for c in ctxs])
        regions = aug.speech_regions(ch.chunks, [it for it in tier.items
                                                 if is_pause(it.label, pau)])
    else:
        regions = list(ch.chunks)
    return cs, regions


def loc_candidates(ch: ft.ChannelData, acc: Tier | None, ag: Tier | None, parent: Tier | None,
                   cfg: dict, pau: str, log: list[str]) -> tuple[aug.CandidateSet, list[Item] | None]:
    acfg = get(cfg, "augment:loc")
    if parent is not None:
        segs = ft.global_segments(parent, None, pau, ch.duration)
    else:
        segs = [(k, Item("x", a0, a1)) for k, (a0, a1) in enumerate(ch.chunks)]
    ft.stylize_globals(ch, segs, cfg, log)
    words = [it for it in ag.items if not is_pause(it.label, pau)] if ag is not None else None
    src = acc if acc is not None else ag
    times = np.array(sorted(it.center for it in src.items if not is_pause(it.label, pau)))
    word = None
    if words is not None:
        word = aug.word_index(times, words)
        keep = word >= 0
        times, word = times[keep], word[keep]
    pw, nw = window_lengths(cfg["preproc"], "loc")
    feats = []
    for t in times:
        spec = ft.LocalSpec(t - pw / 2, t + pw / 2, float(t), "event")
        f = ft.local_features(ch, spec, cfg, True, nw, log)
        fd = {}
        if f is not None:
            fd = {"acc": f["acc"], "gst": {k: f["gst"][k] for k in LINES},
                  "gnl_f0": f["gnl_f0"]}
        if "gnl_en" in acfg["wgt"] and ch.audio is not None:
            g = ft.gnl_en_features(ch, Item("x", float(t), float(t)), cfg)
            if g is not None:
                fd["gnl_en"] = g
        feats.append(fd)
    cs = aug.CandidateSet(ch.fi, ch.ci, times, feats, word=word)
    if words is not None and len(times):
        M, _, _ = aug.build_candidates(feats, acfg["wgt"], acfg["measure"], "augment:loc:wgt")
        cs.pos_seeds, cs.neg_seeds = aug.accent_seeds(
            times, word, words, aug.standardize(M), float(acfg["min_l_a"]),
            float(acfg["max_l_na"]), acfg["acc_select"])
        cs.seedable = True
    return cs, words


def run_augment_classify(files: list[FileInfo], f0s: list[dict], cfg: dict, task: str,
                         log: list[str], seed: int) -> None:
    """Boundary (glob) or accent (loc) augmentation over the corpus."""
    pau = get(cfg, "fsys:label:pau")
    acfg = get(cfg, f"augment:{task}")
    per = []
    need_audio = task == "loc" and "gnl_en" in acfg["wgt"]
    for info, f0 in zip(files, f0s):
        a = load_annotation(info, cfg)
        cfgx = expand_tier_names(cfg, max(1, len(f0["channels"])))
        audio = read_wav(info.aud) if need_audio and info.aud is not None else None
        for ci in range(len(f0["channels"])):
            if f0["channels"][ci]["y"] is None:
                continue
            ch = _aug_channel(info, f0, ci, a, cfgx, audio, pau)
            if task == "glob":
                tier = first_tier(a, cfgx, "fsys:augment:glob:tier", ci)
                if tier is None:
                    ft.note(log, f"file {info.stm} channel {ci + 1}: no boundary candidate tier")
                    continue
                parent = first_tier(a, cfgx, "fsys:augment:glob:tier_parent", ci)
                cs, extra = glob_candidates(ch, tier, parent, cfg, pau)
                per.append((info, a, ci, cs, extra, tier))
            else:
                acc = first_tier(a, cfgx, "fsys:augment:loc:tier_acc", ci)
                if acc is None:
                    acc = a.tiers.get(f"{get(cfg, 'fsys:augment:syl:tier_out_stm')}_{ci + 1}")
                ag = first_tier(a, cfgx, "fsys:augment:loc:tier_ag", ci)
                if acc is None and ag is None:
                    ft.note(log, f"file {info.stm} channel {ci + 1}: no accent candidate tier")
                    continue
                parent = first_tier(a, cfgx, "fsys:augment:loc:tier_parent", ci)
                if parent is None:
                    parent = a.tiers.get(f"{get(cfg, 'fsys:augment:glob:tier_out_stm')}_{ci + 1}")
                if parent is None:
                    ch.chunks = chunk_spans(first_tier(a, cfgx, "fsys:chunk:tier", ci),
                                            ch.duration, pau)
                cs, words = loc_candidates(ch, acc, ag, parent, cfg, pau, log)
                per.append((info, a, ci, cs, words, None))
    log.extend(aug.classify_sets([p[3] for p in per], acfg, task, seed, f"augment:{task}"))
    touched = {}
    for info, a, ci, cs, extra, tier in per:
        if task == "glob":
            if acfg["heuristics"] == "ORT" and not tier.is_event:
                aug.apply_ort(cs, float(acfg["ort_l"]))
            name = f"{get(cfg, 'fsys:augment:glob:tier_out_stm')}_{ci + 1}"
            out = aug.glob_tier(cs, extra, a.duration, float(acfg["min_l"]), name, pau,
                                "x", ci + 1)
        else:
            name = f"{get(cfg, 'fsys:augment:loc:tier_out_stm')}_{ci + 1}"
            out = aug.acc_tier(cs, extra, acfg, name, "x", ci + 1)
        a.add(out)
        touched[info.fi] = (info, a)
    for info, a in touched.values():
        save_annotation(a, info.annot, get(cfg, "fsys:annot:typ"))


# ---------------------------------------------------------------- clustering

CLUSTER_FEATURES = {
    "glob": lambda cfg: [f"{k}_c1" for k in LINES],
    "loc": lambda cfg: [f"c{i}" for i in range(int(get(cfg, "styl:loc:ord")) + 1)],
}


def run_cluster(rows: list[dict], cfg: dict, key: str, seed: int) -> dict:
    cols = CLUSTER_FEATURES[key](cfg)
    ok = [r for r in ex.sort_rows(rows)
          if all(isinstance(r.get(c), (int, float)) and math.isfinite(r[c]) for c in cols)]
    for r in rows:
        r["class"] = None
    if not ok:
        return {"feat": cols, "c": [], "val": math.nan, "n": 0}
    X = np.array([[r[c] for c in cols] for r in ok], dtype=float)
    spec = copy.deepcopy(get(cfg, f"clst:{key}"))
    if spec["mtd"] == "kmeans":
        spec["mtd"] = "kMeans"
    res = cluster(X, spec, seed)
    for r, lab in zip(ok, res.labels):
        r["class"] = int(lab)
    return {"feat": cols, "c": res.cntr, "val": res.val, "n": len(ok)}


# ---------------------------------------------------------------- store

def new_store(cfg: dict) -> dict:
    return {"version": ex.ARCHIVE_VERSION, "config": cfg, "data": {"files": [], "sets": {}},
            "clst": {}, "val": {}, "done": []}


def _clear(store: dict, stages) -> None:
    stages = set(stages)
    store["done"] = [s for s in store["done"] if s not in stages]
    for st in stages & set(STAGE_SETS):
        for name in STAGE_SETS[st]:
            store["data"]["sets"].pop(name, None)
    for key in ("glob", "loc"):
        if f"clst_{key}" in stages:
            store["clst"].pop(key, None)


@dataclass
class RunResult:
    status: int
    outputs: list[Path] = field(default_factory=list)
    log: list[str] = field(default_factory=list)


def _f0_view(store: dict, fi: int) -> dict:
    f = store["data"]["files"][fi]
    return {"t": f["t"], "channels": [{"bv": c["bv"], "y": c["y"]} for c in f["channels"]]}


def run(cfg: dict, base: Path, seed: int | None = None, n_jobs: int = 1,
        from_scratch: bool = False) -> RunResult:
    """Execute the flagged stages; raises ConfigError or OSError on fatal problems."""
    nav = dict(cfg["navigate"])
    if from_scratch:
        nav["from_scratch"] = 1
    problems = navigation_violations(cfg)
    if problems:
        raise ConfigError("; ".join(problems))
    wanted = [s for s in STAGES if nav.get(f"do_{s}")]
    if not wanted:
        return RunResult(0)
    seed = int(cfg.get("seed", 0) if seed is None else seed)
    out_dir = resolve_dir(get(cfg, "fsys:export:dir"), base) or base
    stm = get(cfg, "fsys:export:stm")
    arch = out_dir / f"{stm}_archive.json"
    log: list[str] = []
    if nav.get("do_plot"):
        ft.note(log, "navigate:do_plot is not supported; no plots are produced")
    store = None
    if arch.exists() and not nav.get("from_scratch"):
        store = ex.read_archive(arch)
        if nav.get("overwrite_config"):
            store["config"] = cfg
            store["done"] = []
        elif _strip_nav(store["config"]) != _strip_nav(cfg):
            ft.note(log, "configuration differs from the archived one; archived settings kept "
                       "(set navigate:overwrite_config to replace them)")
            stored = copy.deepcopy(store["config"])
            stored["navigate"] = cfg["navigate"]
            cfg = stored
    if store is None:
        store = new_store(cfg)
    store["config"] = cfg

    need = set()
    if any(s in wanted for s in ("augment_chunk", "augment_syl")):
        need.add("aud")
    if any(s in wanted for s in ("augment_glob", "augment_loc", "preproc") + STYL_STAGES):
        need.add("f0")
    files = discover(cfg, base, need)
    stems = [f.stm for f in files]
    if [f.get("stm") for f in store["data"]["files"]] != stems:
        if store["data"]["files"]:
            ft.note(log, "input file set changed; archived results discarded")
        store["data"]["files"] = []
        store["data"]["sets"] = {}
        store["done"] = []
    done = set(store["done"])

    # augmentation: signal-based tiers first, then classification-based tiers
    sig = [s for s in ("augment_chunk", "augment_syl") if s in wanted and s not in done]
    if sig:
        jobs = [{"info": f, "cfg": cfg, "stages": sig} for f in files if f.aud is not None]
        for r in _map(augment_signal_file, jobs, n_jobs):
            log.extend(r["log"])
        done.update(sig)
        _clear(store, STYL_STAGES + ("clst_glob", "clst_loc"))
        done -= set(STYL_STAGES + ("clst_glob", "clst_loc"))
        store["done"] = sorted(done, key=STAGES.index)
    cls = [s for s in ("augment_glob", "augment_loc") if s in wanted and s not in done]
    if cls and "preproc" not in done:
        _do_preproc(store, files, cfg, log)
        done = set(store["done"])
    for s in cls:
        f0s = [_f0_view(store, i) for i in range(len(files))]
        run_augment_classify(files, f0s, cfg, s.split("_")[1], log, seed)
        done.add(s)
        _clear(store, STYL_STAGES + ("clst_glob", "clst_loc"))
        done -= set(STYL_STAGES + ("clst_glob", "clst_loc"))
    store["done"] = sorted(done, key=STAGES.index)

    if "preproc" in wanted and "preproc" not in done:
        _do_preproc(store, files, cfg, log)
    done = set(store["done"])

    styl = [s for s in STYL_STAGES if s in wanted and s not in done]
    if styl:
        if "preproc" not in done:
            raise ConfigError("stylization requested but no preprocessed f0 is available")
        jobs = [{"info": f, "cfg": cfg, "stages": styl, "f0": _f0_view(store, f.fi)}
                for f in files]
        results = _map(styl_file, jobs, n_jobs)
        for st in styl:
            for name in STAGE_SETS[st]:
                store["data"]["sets"][name] = []
        for fi, r in enumerate(results):
            log.extend(r["log"])
            for name, rows in r["sets"].items():
                store["data"]["sets"].setdefault(name, []).extend(rows)
            for ci, extra in enumerate(r["channels"]):
                chan = store["data"]["files"][fi]["channels"][ci]
                for k in ("r", "resyn", "loc_rms"):
                    if k in extra:
                        chan[k] = extra[k]
        done.update(styl)
        _clear(store, ("clst_glob", "clst_loc"))
        done -= {"clst_glob", "clst_loc"}
        _validation(store)

    for key in ("glob", "loc"):
        st = f"clst_{key}"
        if st in wanted and st not in done:
            rows = store["data"]["sets"].get(key, [])
            res = run_cluster(rows, cfg, key, seed)
            store["clst"][key] = res
            store["val"][f"clst.{key}.silhouette"] = res["val"]
            done.add(st)
    store["done"] = sorted(done, key=STAGES.index)

    outputs: list[Path] = []
    if "export" in wanted:
        outputs = _export(store, files, cfg, out_dir, stm)
    ex.write_archive(store, arch)
    outputs.append(arch)
    ex.append_log(out_dir / f"{stm}log.txt", log, store["val"])
    return RunResult(0, outputs, log)


def _strip_nav(cfg: dict) -> dict:
    out = dict(cfg)
    out.pop("navigate", None)
    out.pop("seed", None)
    return ex.to_jsonable(out)


def _do_preproc(store: dict, files: list[FileInfo], cfg: dict, log: list[str]) -> None:
    pre = run_preproc(files, cfg, log)
    store["data"]["files"] = [
        {"stm": p["stm"], "t": p["t"],
         "channels": [{"bv": c["bv"], "y": c["y"]} for c in p["channels"]]} for p in pre]
    # fresh contours invalidate everything computed from them
    _clear(store, STYL_STAGES + ("clst_glob", "clst_loc", "preproc"))
    store["done"] = sorted(set(store["done"]) | {"preproc"}, key=STAGES.index)
    store["val"] = {}


def _validation(store: dict) -> None:
    glob = store["data"]["sets"].get("glob", [])
    if glob:
        store["val"]["styl.glob.err_prop"] = float(np.mean([bool(r["err"]) for r in glob]))
    rms = [v for f in store["data"]["files"] for c in f["channels"] for v in c.get("loc_rms", [])]
    if rms:
        store["val"]["styl.loc.rms_mean"] = float(np.mean(rms))


def _export(store: dict, files: list[FileInfo], cfg: dict, out_dir: Path, stm: str) -> list[Path]:
    e = get(cfg, "fsys:export")
    sep = e["sep"]
    outputs = []
    tables = {k: v for k, v in store["data"]["sets"].items()}
    if e["csv"]:
        for name in sorted(tables):
            outputs.append(ex.emit_feature_csv(tables[name], name, out_dir, stm, sep))
    if e["summary"]:
        outputs.append(ex.emit_summary(tables, out_dir, stm, sep))
    st = bool(get(cfg, "preproc:st"))
    for kind in ("preproc", "residual", "resyn"):
        if not e[f"f0_{kind}"]:
            continue
        for info, f in zip(files, store["data"]["files"]):
            ys = []
            for c in f["channels"]:
                if c["y"] is None:
                    ys.append(np.zeros(len(f["t"])))
                elif kind == "preproc":
                    ys.append(from_semitones(c["y"], c["bv"], st))
                elif kind == "residual":
                    r = c.get("r")
                    if r is None:
                        ys.append(np.zeros(len(f["t"])))
                    elif get(cfg, "styl:register") == "rng":
                        ys.append(np.asarray(r, dtype=float))
                    else:
                        ys.append(from_semitones(r, c["bv"], st))
                else:
                    ys.append(np.asarray(c.get("resyn", np.zeros(len(f["t"]))), dtype=float))
            name = info.f0.name if info.f0 is not None else f"{info.stm}.f0"
            outputs.append(ex.emit_f0_file(out_dir, kind, name, f["t"], ys))
    return outputs
