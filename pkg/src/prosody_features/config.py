"""Configuration tree: default merge, validation, tier bindings, navigation checks."""
from __future__ import annotations

import copy
import json
import logging
import re
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping

logger = logging.getLogger(__name__)

FEATURE_SETS = ("glob", "loc", "bnd", "bnd_win", "bnd_trend", "gnl_f0", "gnl_en",
                "rhy_f0", "rhy_en", "voice")

# branches whose keys are user defined; no unknown-key warnings below them
_FREE = {("fsys", "channel"), ("fsys", "pic"), ("plot",), ("preproc", "base_prct_grp")}
# branches replaced wholesale by user input (feature selections)
_REPLACE = {("augment", "glob", "wgt"), ("augment", "loc", "wgt")}

TIER_FIELDS = (
    ("fsys", "chunk", "tier"),
    ("fsys", "glob", "tier"),
    ("fsys", "loc", "tier_acc"),
    ("fsys", "loc", "tier_ag"),
    ("fsys", "bnd", "tier"),
    ("fsys", "gnl_f0", "tier"),
    ("fsys", "gnl_en", "tier"),
    ("fsys", "rhy_f0", "tier"),
    ("fsys", "rhy_f0", "tier_rate"),
    ("fsys", "rhy_en", "tier"),
    ("fsys", "rhy_en", "tier_rate"),
    ("fsys", "voice", "tier"),
    ("fsys", "pho", "tier"),
    ("fsys", "augment", "syl", "tier_parent"),
    ("fsys", "augment", "glob", "tier"),
    ("fsys", "augment", "glob", "tier_parent"),
    ("fsys", "augment", "loc", "tier_acc"),
    ("fsys", "augment", "loc", "tier_ag"),
    ("fsys", "augment", "loc", "tier_parent"),
)

_PERCENTILES = (
    "preproc:base_prct", "augment:glob:prct", "augment:loc:prct",
    "styl:glob:prct:bl", "styl:glob:prct:tl", "styl:bnd:prct:bl", "styl:bnd:prct:tl",
)
_POSITIVE = (
    "preproc:point_win", "preproc:nrm_win", "styl:glob:decl_win", "styl:bnd:decl_win",
    "styl:bnd:win", "styl:gnl:win", "styl:gnl_en:win", "styl:gnl_en:sts",
    "styl:rhy_en:sig:win", "styl:rhy_en:sig:sts", "augment:chunk:l", "augment:chunk:l_ref",
    "augment:chunk:e_rel", "augment:syl:l", "augment:syl:l_ref", "augment:syl:d_min",
    "augment:syl:e_rel", "styl:voice:jit:t_max", "styl:voice:jit:fac_max",
)
_CHOICES = {
    "preproc:out:m": ("mean", "median", "fence"),
    "preproc:smooth:mtd": ("sgolay", "med"),
    "preproc:loc_align": ("skip", "left", "right"),
    "styl:register": ("bl", "ml", "tl", "rng", "none"),
    "styl:gnl:sb:domain": ("time", "freq"),
    "styl:gnl:sb:btype": ("none", "low", "high", "band"),
    "augment:chunk:flt:btype": ("none", "low", "high", "band"),
    "augment:syl:flt:btype": ("none", "low", "high", "band"),
    "augment:glob:cntr_mtd": ("split", "seed_kmeans", "seed_prct"),
    "augment:loc:cntr_mtd": ("split", "seed_kmeans", "seed_prct"),
    "augment:glob:measure": ("abs", "delta", "abs+delta"),
    "augment:loc:measure": ("abs", "delta", "abs+delta"),
    "augment:glob:unit": ("batch", "file"),
    "augment:loc:unit": ("batch", "file"),
    "augment:glob:wgt_mtd": ("user", "correlation", "silhouette"),
    "augment:loc:wgt_mtd": ("user", "correlation", "silhouette"),
    "augment:loc:acc_select": ("max", "left", "right"),
    "augment:loc:ag_select": ("max", "all"),
    "clst:glob:mtd": ("meanShift", "kMeans", "kmeans"),
    "clst:loc:mtd": ("meanShift", "kMeans", "kmeans"),
    "clst:glob:kMeans:init": ("meanShift", "random"),
    "clst:loc:kMeans:init": ("meanShift", "random"),
}


class ConfigError(ValueError):
    """Invalid configuration file or value."""


def default_config() -> dict:
    text = resources.files(__package__).joinpath("default_config.json").read_text("utf-8")
    return json.loads(text)


def get(cfg: Mapping, path: str, default: Any = None) -> Any:
    """Look up a colon separated path, e.g. ``get(cfg, "styl:loc:ord")``."""
    node: Any = cfg
    for key in path.split(":"):
        if not isinstance(node, Mapping) or key not in node:
            return default
        node = node[key]
    return node


def _kind(v: Any) -> str:
    if v is None:
        return "any"
    if isinstance(v, (bool, int, float)):
        return "num"
    if isinstance(v, str):
        return "str"
    if isinstance(v, list):
        return "list"
    if isinstance(v, dict):
        return "dict"
    return type(v).__name__


def _compatible(default: Any, value: Any) -> bool:
    dk, vk = _kind(default), _kind(value)
    if dk == "any" or dk == vk:
        return True
    # "string or list of strings", "float or list of floats"
    return {dk, vk} in ({"num", "list"}, {"str", "list"})


def merge(user: Mapping, default: Mapping, path: tuple = ()) -> dict:
    """Return ``user`` merged over ``default``; neither input is modified."""
    out = copy.deepcopy(dict(default))
    for key, val in user.items():
        here = path + (key,)
        name = ":".join(here)
        if path in _FREE:
            out[key] = copy.deepcopy(val)
            continue
        if key not in default:
            if path == ("navigate",):
                raise ConfigError(f"unknown navigation flag {name}")
            if path == ("preproc",) and key in FEATURE_SETS:
                if not isinstance(val, dict):
                    raise ConfigError(f"{name}: expected an object")
                for sub, v in val.items():
                    if sub not in ("point_win", "nrm_win") or _kind(v) != "num":
                        raise ConfigError(f"{name}:{sub}: only numeric point_win/nrm_win allowed")
                out[key] = dict(val)
                continue
            logger.warning("unknown config key %s (kept)", name)
            out[key] = copy.deepcopy(val)
            continue
        if not _compatible(default[key], val):
            raise ConfigError(
                f"type mismatch at {name}: expected {_kind(default[key])}, got {_kind(val)}")
        if here in _REPLACE:
            if not isinstance(val, dict):
                raise ConfigError(f"{name}: expected an object")
            out[key] = copy.deepcopy(val)
        elif isinstance(default[key], dict):
            out[key] = merge(val, default[key], here)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _normalize_channels(cfg: dict) -> None:
    chan = cfg["fsys"]["channel"]
    for tier, idx in list(chan.items()):
        try:
            num = int(str(idx).strip())
        except ValueError:
            raise ConfigError(f"fsys:channel:{tier}: channel index must be an integer") from None
        if num < 1:
            raise ConfigError(f"fsys:channel:{tier}: channel indices start at 1")
        chan[tier] = num


def validate(cfg: Mapping) -> None:
    for p in _PERCENTILES:
        v = get(cfg, p)
        if not (isinstance(v, (int, float)) and 0 <= v <= 100):
            raise ConfigError(f"{p}: percentile must lie in [0,100], got {v!r}")
    for p in _POSITIVE:
        v = get(cfg, p)
        if not (isinstance(v, (int, float)) and v > 0):
            raise ConfigError(f"{p}: must be > 0, got {v!r}")
    for p, allowed in _CHOICES.items():
        v = get(cfg, p)
        if v not in allowed:
            raise ConfigError(f"{p}: {v!r} not in {allowed}")
    if get(cfg, "fs") != 100:
        raise ConfigError("fs: only 100 Hz f0 sampling is supported")
    ordr = get(cfg, "styl:loc:ord")
    if not isinstance(ordr, int) or isinstance(ordr, bool) or ordr < 0:
        raise ConfigError(f"styl:loc:ord: non-negative integer expected, got {ordr!r}")
    win, sord = get(cfg, "preproc:smooth:win"), get(cfg, "preproc:smooth:ord")
    if get(cfg, "preproc:smooth:mtd") == "sgolay" and not (
            int(win) == win and win >= 3 and win % 2 == 1 and sord < win):
        raise ConfigError("preproc:smooth: win must be odd >= 3 and ord < win")
    for br in ("glob", "loc"):
        q = get(cfg, f"clst:{br}:estimate_bandwidth:quantile")
        if not 0 < q <= 1:
            raise ConfigError(f"clst:{br}:estimate_bandwidth:quantile must lie in (0,1]")
        if get(cfg, f"clst:{br}:kMeans:n_cluster") < 1:
            raise ConfigError(f"clst:{br}:kMeans:n_cluster must be >= 1")
        rng = get(cfg, f"styl:{br}:nrm:rng")
        if not (isinstance(rng, list) and len(rng) == 2 and rng[0] < rng[1]):
            raise ConfigError(f"styl:{br}:nrm:rng must be an ascending pair")
    for key, val in get(cfg, "preproc").items():
        if key in FEATURE_SETS:
            for sub, v in val.items():
                if v <= 0:
                    raise ConfigError(f"preproc:{key}:{sub}: must be > 0")


def build_config(user: Mapping) -> dict:
    """Merge, normalize and validate a user tree."""
    if not isinstance(user, Mapping):
        raise ConfigError("configuration root must be a JSON object")
    cfg = merge(user, default_config())
    _normalize_channels(cfg)
    validate(cfg)
    return cfg


def load_config(path: str | Path) -> dict:
    path = Path(path)
    text = path.read_text(encoding="utf-8-sig")
    try:
        user = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from None
    return build_config(user)


def output_stems(cfg: Mapping) -> list[str]:
    syl = get(cfg, "fsys:augment:syl:tier_out_stm")
    return [get(cfg, "fsys:augment:chunk:tier_out_stm"), syl, f"{syl}_bnd",
            get(cfg, "fsys:augment:glob:tier_out_stm"), get(cfg, "fsys:augment:loc:tier_out_stm")]


def _as_list(v: Any) -> list:
    if v is None or v == "":
        return []
    return list(v) if isinstance(v, list) else [v]


def expand_tier_names(cfg: Mapping, n_channels: int) -> dict:
    """Expand augmentation output stems to per-channel names; tier fields become lists."""
    if n_channels < 1:
        raise ValueError("n_channels must be >= 1")
    out = copy.deepcopy(dict(cfg))
    stems = set(output_stems(cfg))
    for path in TIER_FIELDS:
        node = out
        for key in path[:-1]:
            node = node.get(key, {})
        if path[-1] not in node:
            continue
        names: list[str] = []
        for name in _as_list(node[path[-1]]):
            if name in stems:
                names.extend(f"{name}_{c}" for c in range(1, n_channels + 1))
            else:
                names.append(name)
        node[path[-1]] = names
    return out


def tier_channel(cfg: Mapping, name: str) -> int | None:
    """0-based channel index of a tier, from fsys:channel or an expanded output name."""
    chan = get(cfg, "fsys:channel", {})
    if name in chan:
        return int(chan[name]) - 1
    m = re.match(r"^(.*)_(\d+)$", name)
    if m and m.group(1) in set(output_stems(cfg)):
        return int(m.group(2)) - 1
    return None


def tiers_for_channel(cfg: Mapping, field: str, ci: int) -> list[str]:
    """Tier names configured under ``field`` (e.g. "fsys:bnd:tier") bound to channel ci."""
    return [t for t in _as_list(get(cfg, field)) if tier_channel(cfg, t) == ci]


def check_navigation(flags: Mapping, bnd_residual: bool = False) -> list[str]:
    """Dependency violations among navigation flags; empty when consistent."""
    on = {k for k, v in flags.items() if v}
    out = []
    styl = sorted(k for k in on if k.startswith("do_styl_"))
    if styl and "do_preproc" not in on:
        out.append(f"{', '.join(styl)} require do_preproc")
    for k in ("do_styl_loc", "do_styl_loc_ext"):
        if k in on and "do_styl_glob" not in on:
            out.append(f"{k} requires do_styl_glob")
    if bnd_residual and "do_styl_glob" not in on:
        for k in ("do_styl_bnd", "do_styl_bnd_win", "do_styl_bnd_trend"):
            if k in on:
                out.append(f"{k} with styl:bnd:residual=1 requires do_styl_glob")
    for x in ("glob", "loc"):
        if f"do_clst_{x}" in on and f"do_styl_{x}" not in on:
            out.append(f"do_clst_{x} requires do_styl_{x}")
    return out


def navigation_violations(cfg: Mapping) -> list[str]:
    return check_navigation(cfg["navigate"], bool(get(cfg, "styl:bnd:residual")))


def iter_tier_fields(cfg: Mapping) -> Iterable[tuple[str, list]]:
    for path in TIER_FIELDS:
        yield ":".join(path), _as_list(get(cfg, ":".join(path)))
