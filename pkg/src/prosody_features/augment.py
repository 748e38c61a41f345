"""Unsupervised annotation: chunks, syllable nuclei, phrase boundaries and accents."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .annot import PAUSE_LABEL, Item, Tier
from .cluster import kmeans, silhouette_mean
from .config import ConfigError
from .dsp import FilterSpec, butter_filter

logger = logging.getLogger(__name__)

HOP = 0.01


# ---------------------------------------------------------------- settings

@dataclass
class ChunkSettings:
    l: float = 0.1524
    l_ref: float = 5.0
    e_rel: float = 0.1
    margin: float = 0.0
    min_pau_l: float = 0.3
    min_chunk_l: float = 0.3
    fbnd: bool = True
    n: int = -1
    flt: FilterSpec = field(default_factory=lambda: FilterSpec("low", 8000, 5))

    @classmethod
    def from_cfg(cls, d: dict) -> "ChunkSettings":
        return cls(float(d["l"]), float(d["l_ref"]), float(d["e_rel"]), float(d["margin"]),
                   float(d["min_pau_l"]), float(d["min_chunk_l"]), bool(d["fbnd"]), int(d["n"]),
                   FilterSpec.from_cfg(d["flt"]))


@dataclass
class SylSettings:
    l: float = 0.08
    l_ref: float = 0.15
    e_rel: float = 1.07
    e_min: float = 0.16
    d_min: float = 0.05
    flt: FilterSpec = field(default_factory=lambda: FilterSpec("band", [200, 4000], 5))

    @classmethod
    def from_cfg(cls, d: dict) -> "SylSettings":
        return cls(float(d["l"]), float(d["l_ref"]), float(d["e_rel"]), float(d["e_min"]),
                   float(d["d_min"]), FilterSpec.from_cfg(d["flt"]))


# ---------------------------------------------------------------- energy

def _safe_filter(x: np.ndarray, fs: float, spec: FilterSpec) -> np.ndarray:
    """Filter, degrading cutoffs that reach the Nyquist frequency."""
    nyq = fs / 2.0
    f = np.atleast_1d(np.asarray(spec.f, dtype=float))
    if spec.btype == "none" or len(x) <= 3 * (2 * spec.ord + 1):
        return np.asarray(x, dtype=float)
    if spec.btype == "low" and f[0] >= nyq:
        return np.asarray(x, dtype=float)
    if spec.btype == "band" and f[-1] >= nyq:
        spec = FilterSpec("high", float(f[0]), spec.ord)
    if spec.btype == "high" and np.atleast_1d(spec.f)[0] >= nyq:
        return np.zeros_like(x, dtype=float)
    return butter_filter(x, fs, spec)


def frame_rms(x: np.ndarray, fs: float, win: float, hop: float = HOP):
    """RMS over windows centered at (k + 0.5) * hop, clipped to the signal."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    dur = n / fs
    nf = max(1, int(math.ceil(dur / hop - 1e-9)))
    t = (np.arange(nf) + 0.5) * hop
    cs = np.concatenate([[0.0], np.cumsum(x * x)])
    half = win / 2.0
    a = np.clip(np.round((t - half) * fs).astype(int), 0, n)
    b = np.clip(np.round((t + half) * fs).astype(int), 0, n)
    b = np.maximum(b, np.minimum(a + 1, n))
    cnt = np.maximum(b - a, 1)
    e = np.sqrt(np.maximum(cs[b] - cs[a], 0.0) / cnt)
    e[e < 1e-12] = 0.0
    return t, e


# ---------------------------------------------------------------- chunking

def _runs(mask: np.ndarray) -> list[list]:
    """[value, start_frame, end_frame_exclusive] runs of a boolean array."""
    out = []
    for k, v in enumerate(mask):
        if out and out[-1][0] == v:
            out[-1][2] = k + 1
        else:
            out.append([bool(v), k, k + 1])
    return out


def _merge_runs(runs: list[list]) -> list[list]:
    out = []
    for r in runs:
        if out and out[-1][0] == r[0]:
            out[-1][2] = r[2]
        else:
            out.append(list(r))
    return out


def _apply_margin(spans: list[tuple], margin: float) -> list[tuple]:
    """Grow chunks into neighboring pauses; pauses used up disappear."""
    out = [list(x) for x in spans]
    for k, (p, a, b) in enumerate(spans):
        if p:
            continue
        if k > 0:
            out[k - 1][2] = min(out[k - 1][2], max(out[k - 1][1], a - margin))
            out[k][1] = out[k - 1][2]
        if k < len(spans) - 1:
            out[k + 1][1] = max(out[k + 1][1], min(out[k + 1][2], b + margin))
            out[k][2] = out[k + 1][1]
    merged: list[list] = []
    for p, a, b in out:
        if b - a <= 1e-9:
            continue
        if merged and merged[-1][0] == p:
            merged[-1][2] = b
        else:
            merged.append([p, a, b])
    return [tuple(x) for x in merged]


def detect_chunks(x: np.ndarray, fs: float, s: ChunkSettings, name: str = "chunk",
                  pause_label: str = PAUSE_LABEL, chunk_label: str = "x",
                  channel: int | None = None) -> Tier:
    """Energy-based interpausal units tiling [0, duration]."""
    x = np.asarray(x, dtype=float)
    if len(x) == 0:
        raise ValueError("empty signal")
    dur = len(x) / fs
    y = _safe_filter(x, fs, s.flt)
    _, ea = frame_rms(y, fs, s.l)
    _, er = frame_rms(y, fs, s.l_ref)
    ay = np.abs(y)
    sel = ay[ay > np.median(ay)]
    e_sel = float(np.sqrt(np.mean(sel * sel))) if len(sel) else 0.0
    e_ref = np.where(er < e_sel * s.e_rel, e_sel, er)
    pause = (ea < e_ref * s.e_rel) | (ea <= 1e-12)
    runs = _runs(pause)
    nf = len(pause)

    def length(r):
        return (min(r[2] * HOP, dur) - r[1] * HOP)

    def edge(r):
        return r[1] == 0 or r[2] == nf

    for r in runs:
        if r[0] and length(r) < s.min_pau_l and not (s.fbnd and edge(r)):
            r[0] = False
    runs = _merge_runs(runs)
    for r in runs:
        if not r[0] and length(r) < s.min_chunk_l:
            r[0] = True
    runs = _merge_runs(runs)
    if s.n >= 0:
        inner = sorted((r for r in runs if r[0] and not edge(r)), key=lambda r: -length(r))
        for r in inner[s.n:]:
            r[0] = False
        runs = _merge_runs(runs)
    spans = [(r[0], r[1] * HOP, min(r[2] * HOP, dur)) for r in runs]
    if s.margin > 0:
        spans = _apply_margin(spans, s.margin)
    items = [Item(pause_label if p else chunk_label, a, b) for p, a, b in spans]
    items[-1] = Item(items[-1].label, items[-1].t_start, dur)
    return Tier(name, "segment", items, channel)


# ---------------------------------------------------------------- syllables

def detect_syllables(x: np.ndarray, fs: float, chunks: list[tuple[float, float]] | None,
                     s: SylSettings, names=("syl", "syl_bnd"), label: str = "x",
                     channel: int | None = None) -> tuple[Tier, Tier]:
    """Syllable nuclei at qualified energy maxima and boundaries at minima between them."""
    x = np.asarray(x, dtype=float)
    dur = len(x) / fs
    y = _safe_filter(x, fs, s.flt)
    t, ea = frame_rms(y, fs, s.l)
    _, er = frame_rms(y, fs, s.l_ref)
    if not chunks:
        chunks = [(0.0, dur)]
    nuclei: list[tuple[int, int]] = []    # (frame, chunk index)
    for ci, (a, b) in enumerate(chunks):
        i0, i1 = int(round(a * fs)), int(round(b * fs))
        seg = y[i0:i1]
        e_c = float(np.sqrt(np.mean(seg * seg))) if len(seg) else 0.0
        ks = np.flatnonzero((t >= a) & (t < b))
        if len(ks) == 0 or e_c <= 0:
            continue
        cand = []
        for k in ks:
            left = ea[k - 1] if k > 0 else -np.inf
            right = ea[k + 1] if k < len(ea) - 1 else -np.inf
            if ea[k] > left and ea[k] >= right and ea[k] > er[k] * s.e_rel \
                    and ea[k] >= e_c * s.e_min and ea[k] > 0:
                cand.append(k)
        kept: list[int] = []
        for k in sorted(cand, key=lambda k: (-ea[k], k)):
            if all(abs(t[k] - t[j]) >= s.d_min - 1e-9 for j in kept):
                kept.append(k)
        nuclei.extend((k, ci) for k in sorted(kept))
    nuc_items = [Item(label, float(t[k]), float(t[k])) for k, _ in nuclei]
    bnd_items = []
    for (k1, c1), (k2, c2) in zip(nuclei[:-1], nuclei[1:]):
        if c1 != c2 or k2 - k1 < 2:
            continue
        m = k1 + 1 + int(np.argmin(ea[k1 + 1:k2]))
        bnd_items.append(Item(label, float(t[m]), float(t[m])))
    return (Tier(names[0], "event", nuc_items, channel),
            Tier(names[1], "event", bnd_items, channel))


# ---------------------------------------------------------------- candidate matrices

def weight_paths(wgt: dict, prefix: tuple = ()) -> list[tuple[tuple, float]]:
    """Leaf paths and weights of a feature selection tree."""
    out = []
    for k in sorted(wgt):
        v = wgt[k]
        if isinstance(v, dict):
            out.extend(weight_paths(v, prefix + (k,)))
        else:
            out.append((prefix + (k,), float(v)))
    return out


_MISSING = object()


def _lookup(d, path):
    for k in path:
        if not isinstance(d, dict) or k not in d:
            return _MISSING
        d = d[k]
    return d


def build_candidates(feats: list[dict], wgt: dict, measure: str = "abs",
                     where: str = "augment:wgt") -> tuple[np.ndarray, list[str], np.ndarray]:
    """Raw candidate matrix (NaN for missing values), column names, user weights."""
    paths = weight_paths(wgt)
    if not paths:
        raise ConfigError(f"{where}: no features selected")
    cols: list[np.ndarray] = []
    names: list[str] = []
    weights: list[float] = []
    for path, w in paths:
        vals = [_lookup(f, path) for f in feats]
        if feats and all(v is _MISSING for v in vals):
            raise ConfigError(f"{where}:{':'.join(path)}: feature not available")
        width = max((len(np.atleast_1d(v)) for v in vals
                     if v is not _MISSING and v is not None and not np.isscalar(v)), default=1)
        is_list = any(v is not _MISSING and v is not None and not np.isscalar(v) for v in vals)
        block = np.full((len(feats), width), np.nan)
        for i, v in enumerate(vals):
            if v is _MISSING or v is None:
                continue
            a = np.atleast_1d(np.asarray(v, dtype=float))
            block[i, :len(a)] = np.abs(a) if is_list else a
        for j in range(width):
            cols.append(block[:, j])
            names.append(":".join(path) + (f"_{j}" if is_list else ""))
            weights.append(w)
    M = np.column_stack(cols) if cols else np.zeros((len(feats), 0))
    M, names, weights = apply_measure(M, names, np.asarray(weights), measure)
    return M, names, weights


def apply_measure(M: np.ndarray, names: list[str], w: np.ndarray, measure: str):
    if measure == "abs":
        return M, names, w
    D = np.zeros_like(M)
    if len(M) > 1:
        D[1:] = M[1:] - M[:-1]
    if measure == "delta":
        return D, [f"{n}_delta" for n in names], w
    if measure == "abs+delta":
        return (np.hstack([M, D]), names + [f"{n}_delta" for n in names],
                np.concatenate([w, w]))
    raise ConfigError(f"unknown measure {measure!r}")


def standardize(M: np.ndarray) -> np.ndarray:
    """Median imputation followed by column z-scores."""
    M = np.array(M, dtype=float)
    for j in range(M.shape[1]):
        col = M[:, j]
        bad = ~np.isfinite(col)
        if bad.all():
            col[:] = 0.0
        elif bad.any():
            col[bad] = np.median(col[~bad])
        sd = col.std()
        M[:, j] = (col - col.mean()) / sd if sd > 0 else 0.0
    return M


# ---------------------------------------------------------------- weighting

def _minmax_weights(s: np.ndarray) -> np.ndarray:
    s = np.nan_to_num(np.asarray(s, dtype=float), nan=0.0)
    if len(s) == 1:
        return np.ones(1)
    lo, hi = s.min(), s.max()
    if hi - lo <= 0:
        return np.ones(len(s))
    return (s - lo) / (hi - lo)


def weight_features(M: np.ndarray, mtd: str, user: np.ndarray | None = None,
                    labels: np.ndarray | None = None, seed: int = 0,
                    max_rows: int = 2000) -> np.ndarray:
    """Per-column weights from user values, median correlation or silhouette."""
    M = np.asarray(M, dtype=float)
    ncol = M.shape[1]
    if mtd == "user":
        w = np.ones(ncol) if user is None else np.asarray(user, dtype=float)
        return np.maximum(w, 0.0)
    if mtd == "correlation":
        med = np.median(M, axis=1)
        r = np.zeros(ncol)
        for j in range(ncol):
            a = M[:, j]
            if a.std() > 0 and med.std() > 0:
                r[j] = np.corrcoef(a, med)[0, 1]
            elif a.std() > 0 or med.std() > 0:
                r[j] = 0.0
            else:
                r[j] = 1.0
        r[r < 0] = 0.0
        if r.sum() <= 0:
            logger.info("no positive feature correlation; uniform weights")
            return np.full(ncol, 1.0 / ncol)
        return r / r.sum()
    if mtd == "silhouette":
        if ncol == 1:
            return np.ones(1)
        if labels is None or len(np.unique(labels)) < 2:
            return np.ones(ncol)
        X, lab = M, np.asarray(labels)
        if len(X) > max_rows:
            pick = np.random.default_rng(seed).choice(len(X), max_rows, replace=False)
            X, lab = X[pick], lab[pick]
            if len(np.unique(lab)) < 2:
                return np.ones(ncol)
        s = np.array([silhouette_mean(X[:, [j]], lab) for j in range(ncol)])
        return _minmax_weights(s)
    raise ConfigError(f"unknown weighting method {mtd!r}")


# ---------------------------------------------------------------- classification

@dataclass
class Classification:
    labels: np.ndarray          # True for B / A
    strength: np.ndarray        # weighted distance to the negative centroid
    method: str
    weights: np.ndarray
    log: list[str] = field(default_factory=list)


def _wdist(X: np.ndarray, c: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.sqrt(((X - c) ** 2 * w).sum(axis=1))


def split_centroids(X: np.ndarray, prct: float) -> tuple[np.ndarray, np.ndarray]:
    pos, neg = np.zeros(X.shape[1]), np.zeros(X.shape[1])
    for j in range(X.shape[1]):
        col = X[:, j]
        thr = np.percentile(col, prct)
        hi, lo = col[col > thr], col[col <= thr]
        pos[j] = np.median(hi) if len(hi) else col.max()
        neg[j] = np.median(lo) if len(lo) else col.min()
    return pos, neg


def split_labels(X: np.ndarray, prct: float) -> np.ndarray:
    pos, neg = split_centroids(X, prct)
    return ((X - pos) ** 2).sum(axis=1) < ((X - neg) ** 2).sum(axis=1)


def classify(X: np.ndarray, mtd: str, prct: float, pos_seeds: np.ndarray | None = None,
             neg_seeds: np.ndarray | None = None, wgt_mtd: str = "user",
             user_w: np.ndarray | None = None, seed: int = 0) -> Classification:
    """Nearest-centroid or seeded classification into positive and negative class.

    ``X`` must already be standardized. Seed index arrays select rows used to
    bootstrap the positive and negative centroids.
    """
    X = np.asarray(X, dtype=float)
    log: list[str] = []
    n = len(X)
    if n == 0:
        return Classification(np.zeros(0, bool), np.zeros(0), mtd, np.ones(X.shape[1]), log)
    has_seeds = (pos_seeds is not None and neg_seeds is not None
                 and len(pos_seeds) > 0 and len(neg_seeds) > 0)
    if mtd != "split" and not has_seeds:
        log.append(f"{mtd}: no seed centroids available, falling back to split")
        logger.info(log[-1])
        mtd = "split"
    if has_seeds:
        seed_lab = np.full(n, -1)
        seed_lab[neg_seeds] = 0
        seed_lab[pos_seeds] = 1
        sel = seed_lab >= 0
        w = weight_features(X[sel], wgt_mtd, user_w, seed_lab[sel], seed)
    else:
        w = weight_features(X, wgt_mtd, user_w, split_labels(X, prct).astype(int), seed)
    if not np.any(w > 0):
        w = np.ones(X.shape[1])
    if mtd == "split":
        pos, neg = split_centroids(X, prct)
        labels = _wdist(X, pos, w) < _wdist(X, neg, w)
        strength = _wdist(X, neg, w)
    elif mtd == "seed_kmeans":
        sw = np.sqrt(w)
        pos = X[pos_seeds].mean(axis=0)
        neg = X[neg_seeds].mean(axis=0)
        res = kmeans(X * sw, 2, init=np.vstack([pos * sw, neg * sw]), seed=seed)
        labels = res.labels == 0
        strength = np.sqrt(((X * sw - res.cntr[1]) ** 2).sum(axis=1))
    elif mtd == "seed_prct":
        neg = X[neg_seeds].mean(axis=0)
        strength = _wdist(X, neg, w)
        labels = strength > np.percentile(strength, prct)
    else:
        raise ConfigError(f"unknown centroid method {mtd!r}")
    return Classification(np.asarray(labels, bool), np.asarray(strength, float), mtd, w, log)


# ---------------------------------------------------------------- candidate sets

@dataclass
class CandidateSet:
    """Candidates of one file channel for one augmentation task."""
    fi: int
    ci: int
    times: np.ndarray
    feats: list[dict]
    pos_seeds: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    neg_seeds: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    seedable: bool = False
    word: np.ndarray | None = None       # index of the word holding each candidate
    pre_dur: np.ndarray | None = None    # duration of the item before each boundary
    labels: np.ndarray | None = None
    strength: np.ndarray | None = None


def classify_sets(sets: list[CandidateSet], acfg: dict, task: str, seed: int = 0,
                  where: str = "augment") -> list[str]:
    """Classify candidate sets pooled (unit=batch) or per file; fills labels/strength."""
    log: list[str] = []
    groups = [sets] if acfg["unit"] == "batch" else [[s] for s in sets]
    for grp in groups:
        grp = [s for s in grp if len(s.times)]
        if not grp:
            continue
        raw, offs = [], [0]
        names = uw = None
        for s in grp:
            M, names, uw = build_candidates(s.feats, acfg["wgt"], acfg["measure"], where)
            raw.append(M)
            offs.append(offs[-1] + len(M))
        X = standardize(np.vstack(raw))
        mtd = acfg["cntr_mtd"]
        pos = neg = None
        if mtd != "split":
            if all(s.seedable for s in grp):
                pos = np.concatenate([s.pos_seeds + o for s, o in zip(grp, offs)]).astype(int)
                neg = np.concatenate([s.neg_seeds + o for s, o in zip(grp, offs)]).astype(int)
            else:
                log.append(f"{where}: {mtd} needs segment tier input, falling back to split")
                logger.info(log[-1])
                mtd = "split"
        res = classify(X, mtd, float(acfg["prct"]), pos, neg, acfg["wgt_mtd"], uw, seed)
        log.extend(res.log)
        for s, a, b in zip(grp, offs[:-1], offs[1:]):
            s.labels = res.labels[a:b].copy()
            s.strength = res.strength[a:b].copy()
    return log


def prune_min_distance(times: np.ndarray, labels: np.ndarray, strength: np.ndarray,
                       min_l: float) -> np.ndarray:
    """Among positives closer than min_l keep the stronger ones (greedy by strength)."""
    labels = np.asarray(labels, bool).copy()
    idx = np.flatnonzero(labels)
    kept: list[int] = []
    for i in sorted(idx, key=lambda i: (-strength[i], times[i])):
        if all(abs(times[i] - times[j]) >= min_l for j in kept):
            kept.append(i)
    out = np.zeros_like(labels)
    out[kept] = True
    return out


# ---------------------------------------------------------------- boundaries

def boundary_seeds(contexts, pause_items: list[Item], min_l: float):
    """Positive seeds at pause-adjacent candidates, negative seeds within min_l of them."""
    times = np.array([c.seg1[1] for c in contexts])
    pos = []
    for k, c in enumerate(contexts):
        gap = c.seg2[0] - c.seg1[1] > 1e-9
        between = any(p.t_start >= c.seg1[1] - 1e-9 and p.t_end <= c.seg2[0] + 1e-9
                      for p in pause_items)
        if gap or between:
            pos.append(k)
    pos_t = times[pos] if pos else np.zeros(0)
    neg = [k for k in range(len(contexts)) if k not in set(pos)
           and len(pos_t) and np.min(np.abs(times[k] - pos_t)) < min_l]
    return np.array(pos, int), np.array(neg, int)


def apply_ort(cs: CandidateSet, ort_l: float) -> None:
    """Reject boundaries after words shorter than ort_l."""
    if cs.pre_dur is None or cs.labels is None:
        return
    cs.labels = cs.labels & ~(cs.pre_dur < ort_l)


def glob_tier(cs: CandidateSet, regions: list[tuple[float, float]], duration: float,
              min_l: float, name: str, pause_label: str = PAUSE_LABEL,
              label: str = "x", channel: int | None = None) -> Tier:
    """Segment tier splitting speech regions at accepted boundaries."""
    keep = prune_min_distance(cs.times, cs.labels, cs.strength, min_l) \
        if cs.labels is not None and len(cs.times) else np.zeros(0, bool)
    cuts = np.sort(cs.times[keep]) if len(keep) else np.zeros(0)
    items: list[Item] = []
    pos = 0.0
    for a, b in regions:
        if a > pos + 1e-9:
            items.append(Item(pause_label, pos, a))
        start = a
        for c in cuts:
            if a + 1e-9 < c < b - 1e-9:
                items.append(Item(label, start, float(c)))
                start = float(c)
        items.append(Item(label, start, b))
        pos = b
    if duration > pos + 1e-9:
        items.append(Item(pause_label, pos, duration))
    return Tier(name, "segment", items, channel)


def speech_regions(parent: list[tuple[float, float]], pauses: list[Item]) -> list[tuple[float, float]]:
    """Parent spans with pause items cut out."""
    out = []
    for a, b in parent:
        cur = [(a, b)]
        for p in pauses:
            nxt = []
            for x, y in cur:
                if p.t_end <= x or p.t_start >= y:
                    nxt.append((x, y))
                    continue
                if p.t_start > x:
                    nxt.append((x, p.t_start))
                if p.t_end < y:
                    nxt.append((p.t_end, y))
            cur = nxt
        out.extend((x, y) for x, y in cur if y - x > 1e-9)
    return out


# ---------------------------------------------------------------- accents

def word_index(times: np.ndarray, words: list[Item]) -> np.ndarray:
    out = np.full(len(times), -1)
    for k, t in enumerate(times):
        for j, w in enumerate(words):
            if w.t_start <= t < w.t_end or (t == w.t_end and j == len(words) - 1):
                out[k] = j
                break
    return out


def _pick(cands: list[int], how: str, score: np.ndarray) -> int:
    if how == "left":
        return cands[0]
    if how == "right":
        return cands[-1]
    return max(cands, key=lambda i: (score[i], -i))


def accent_seeds(times: np.ndarray, word: np.ndarray, words: list[Item], Xz: np.ndarray,
                 min_l_a: float, max_l_na: float, acc_select: str):
    """One positive seed per long word and all candidates of short words as negatives."""
    score = Xz.mean(axis=1) if Xz.shape[1] else np.zeros(len(times))
    pos, neg = [], []
    for j, w in enumerate(words):
        cands = list(np.flatnonzero(word == j))
        if not cands:
            continue
        d = w.t_end - w.t_start
        if d > min_l_a:
            pos.append(_pick(cands, acc_select, score))
        elif d < max_l_na:
            neg.extend(cands)
    return np.array(pos, int), np.array(neg, int)


def acc_tier(cs: CandidateSet, words: list[Item] | None, acfg: dict, name: str,
             label: str = "x", channel: int | None = None) -> Tier:
    """Event tier of accents after per-word reduction and min-distance pruning."""
    times = cs.times
    labels = cs.labels if cs.labels is not None else np.zeros(len(times), bool)
    strength = cs.strength if cs.strength is not None else np.zeros(len(times))
    stamps: list[float] = []
    if words is not None and cs.word is not None:
        if acfg["ag_select"] == "all":
            for j, w in enumerate(words):
                cands = list(np.flatnonzero(cs.word == j))
                if cands:
                    stamps.append(float(times[_pick(cands, acfg["acc_select"], strength)]))
                else:
                    stamps.append(w.center)
            return Tier(name, "event", [Item(label, t, t) for t in sorted(stamps)], channel)
        keep = np.zeros(len(times), bool)
        for j in range(len(words)):
            cands = [i for i in np.flatnonzero(cs.word == j) if labels[i]]
            if cands:
                keep[_pick(cands, acfg["acc_select"], strength)] = True
        labels = keep
    keep = prune_min_distance(times, labels, strength, float(acfg["min_l"]))
    stamps = sorted(float(t) for t in times[keep])
    return Tier(name, "event", [Item(label, t, t) for t in stamps], channel)
