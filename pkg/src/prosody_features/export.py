"""CSV tables, summaries, f0 tracks, JSON result archive and the session log."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .sigio import write_f0_table

ARCHIVE_VERSION = 1

PROVENANCE = ("fi", "ci", "ii", "stm", "t_on", "t_off", "tier", "lab", "lab_ag", "lab_acc",
              "lab_next", "is_init", "is_fin", "is_init_chunk", "is_fin_chunk")
CATEGORICAL = ("lab", "lab_ag", "lab_acc", "lab_next", "class")
_NOT_SUMMARIZED = set(PROVENANCE) - set(CATEGORICAL)

_DESCRIPTIONS = {
    "fi": "file index, from 0",
    "ci": "channel index, from 0",
    "ii": "item index within its tier, from 0",
    "stm": "annotation file stem",
    "t_on": "onset time (s)",
    "t_off": "offset time (s); equals t_on for events",
    "tier": "analysis tier name",
    "lab": "item label",
    "lab_ag": "accent group label",
    "lab_acc": "accent label",
    "lab_next": "label of the post-boundary item",
    "is_init": "initial in its global segment",
    "is_fin": "final in its global segment",
    "is_init_chunk": "initial in its chunk",
    "is_fin_chunk": "final in its chunk",
    "class": "contour class",
}


class ArchiveError(RuntimeError):
    """Unreadable or incompatible result archive."""


# ---------------------------------------------------------------- values

def format_value(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, (bool, np.bool_)):
        return "yes" if v else "no"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "NA"
        if math.isinf(v):
            return "Inf" if v > 0 else "-Inf"
        return "%.12g" % v
    return str(v)


def _kind(values) -> str:
    seen = [v for v in values if v is not None and not (isinstance(v, float) and math.isnan(v))]
    if not seen:
        return "numeric"
    if all(isinstance(v, (bool, np.bool_)) for v in seen):
        return "flag"
    if all(isinstance(v, (int, float, np.integer, np.floating)) and
           not isinstance(v, (bool, np.bool_)) for v in seen):
        return "numeric"
    return "categorical"


# ---------------------------------------------------------------- tables

def column_order(rows: list[dict]) -> list[str]:
    keys = set()
    for r in rows:
        keys.update(r)
    prov = [k for k in PROVENANCE if k in keys]
    grp = sorted(k for k in keys if k.startswith("grp_"))
    rest = sorted(keys - set(prov) - set(grp))
    return prov + grp + rest


def sort_rows(rows: list[dict]) -> list[dict]:
    return sorted(rows, key=lambda r: (r.get("fi", 0), r.get("ci", 0), str(r.get("tier", "")),
                                       _num(r.get("t_on")), _num(r.get("ii"))))


def _num(v) -> float:
    return float(v) if isinstance(v, (int, float, np.integer, np.floating)) else -1.0


def render_csv(rows: list[dict], sep: str = ",", columns: list[str] | None = None) -> str:
    rows = sort_rows(rows)
    cols = columns if columns is not None else column_order(rows)
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=sep, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([format_value(r.get(c)) for c in cols])
    return buf.getvalue()


def manifest(rows: list[dict], columns: list[str]) -> list[dict]:
    out = []
    for c in columns:
        vals = [r.get(c) for r in rows]
        desc = _DESCRIPTIONS.get(c, "grouping variable from the file name"
                                 if c.startswith("grp_") else "feature")
        out.append({"name": c, "type": _kind(vals), "description": desc})
    return out


def emit_feature_csv(rows: list[dict], set_name: str, directory: str | Path, stm: str,
                     sep: str = ",") -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    cols = column_order(rows)
    path = d / f"{stm}_{set_name}.csv"
    path.write_text(render_csv(rows, sep, cols), encoding="utf-8")
    (d / f"{stm}_{set_name}.columns.json").write_text(
        json.dumps(manifest(rows, cols), indent=1) + "\n", encoding="utf-8")
    return path


def parse_csv(text: str, sep: str = ",") -> list[dict]:
    """Re-read a feature table: numbers as float, yes/no as bool, NA as None."""
    rdr = csv.reader(io.StringIO(text), delimiter=sep)
    header = next(rdr)
    out = []
    for rec in rdr:
        row = {}
        for k, v in zip(header, rec):
            row[k] = _parse_cell(v)
        out.append(row)
    return out


def _parse_cell(v: str):
    if v == "NA":
        return None
    if v == "yes":
        return True
    if v == "no":
        return False
    try:
        return float(v)
    except ValueError:
        return v


# ---------------------------------------------------------------- summary

def entropy(labels) -> float:
    vals, counts = np.unique(np.asarray([str(v) for v in labels]), return_counts=True)
    if len(vals) == 0:
        return math.nan
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum()) + 0.0


def summarize(tables: dict[str, list[dict]]) -> list[dict]:
    """One row per file and channel; columns per feature set, tier, feature and statistic."""
    groups: dict[tuple, dict] = {}
    for set_name in sorted(tables):
        if set_name.endswith("_file"):
            continue
        by_key: dict[tuple, list[dict]] = {}
        for r in tables[set_name]:
            by_key.setdefault((r["fi"], r["ci"], r.get("tier", "")), []).append(r)
        for (fi, ci, tier), rows in sorted(by_key.items(), key=lambda kv: (kv[0][0], kv[0][1],
                                                                            str(kv[0][2]))):
            out = groups.setdefault((fi, ci), {"fi": fi, "ci": ci, "stm": rows[0].get("stm")})
            for k, v in rows[0].items():
                if k.startswith("grp_"):
                    out[k] = v
            pre = set_name if set_name in ("glob", "loc") else f"{set_name}_{tier}"
            for c in column_order(rows):
                if c in _NOT_SUMMARIZED or c.startswith("grp_"):
                    continue
                vals = [r.get(c) for r in rows]
                kind = "categorical" if c in CATEGORICAL else _kind(vals)
                if kind == "numeric":
                    x = np.array([v for v in vals if v is not None], dtype=float)
                    x = x[np.isfinite(x)]
                    if len(x):
                        q1, med, q3 = np.percentile(x, [25, 50, 75])
                        st = {"m": x.mean(), "med": med, "sd": x.std(), "iqr": q3 - q1}
                    else:
                        st = {k: math.nan for k in ("m", "med", "sd", "iqr")}
                    for k, v in st.items():
                        out[f"{pre}_{c}_{k}"] = float(v)
                else:
                    out[f"{pre}_{c}_h"] = entropy([v for v in vals if v is not None])
    return [groups[k] for k in sorted(groups)]


def emit_summary(tables: dict[str, list[dict]], directory: str | Path, stm: str,
                 sep: str = ",") -> Path:
    rows = summarize(tables)
    cols = (["fi", "ci", "stm"] + sorted({k for r in rows for k in r if k.startswith("grp_")})
            + sorted({k for r in rows for k in r} - {"fi", "ci", "stm"}
                     - {k for r in rows for k in r if k.startswith("grp_")}))
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    path = d / f"{stm}_summary.csv"
    path.write_text(render_csv(rows, sep, cols), encoding="utf-8")
    (d / f"{stm}_summary.columns.json").write_text(
        json.dumps(manifest(rows, cols), indent=1) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------- f0 tracks

def emit_f0_file(directory: str | Path, kind: str, name: str, t, ys) -> Path:
    d = Path(directory) / f"f0_{kind}"
    d.mkdir(parents=True, exist_ok=True)
    path = d / name
    path.write_text(write_f0_table(np.asarray(t), [np.asarray(y) for y in ys]), encoding="utf-8")
    return path


# ---------------------------------------------------------------- archive

def to_jsonable(x):
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [to_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


def write_archive(store: dict, path: str | Path) -> None:
    """Atomic JSON write: temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = dict(store)
    data["version"] = ARCHIVE_VERSION
    text = json.dumps(to_jsonable(data), sort_keys=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_archive(path: str | Path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ArchiveError(f"{path}: corrupt archive ({e.msg})") from None
    if data.get("version") != ARCHIVE_VERSION:
        raise ArchiveError(f"{path}: archive version {data.get('version')!r}, "
                           f"expected {ARCHIVE_VERSION}; rerun with --from-scratch")
    return data


# ---------------------------------------------------------------- log

def append_log(path: str | Path, entries: list[str], validation: dict | None = None,
               now: datetime | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    stamp = (now or datetime.now(timezone.utc)).isoformat(timespec="seconds")
    lines = [f"# session {stamp}"] + [str(e) for e in entries]
    if validation:
        lines.append("# validation")
        lines.extend(f"{k}: {format_value(v)}" for k, v in sorted(validation.items()))
    with open(path, "a", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
