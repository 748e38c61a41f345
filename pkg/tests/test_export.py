import json
import math
from datetime import datetime, timezone

import numpy as np
import pytest

from prosody_features import export as ex
from prosody_features.sigio import read_f0_file


def _rows():
    return [
        {"fi": 0, "ci": 0, "ii": 1, "stm": "a", "tier": "w", "t_on": 1.0, "t_off": 2.0,
         "lab": "x", "is_init": True, "is_fin": False, "c0": 0.5, "c1": math.nan},
        {"fi": 0, "ci": 0, "ii": 0, "stm": "a", "tier": "w", "t_on": 0.0, "t_off": 1.0,
         "lab": "y", "is_init": False, "is_fin": True, "c0": 1 / 3, "grp_spk": "s1"},
    ]


def test_format_values():
    assert ex.format_value(None) == "NA"
    assert ex.format_value(math.nan) == "NA"
    assert ex.format_value(True) == "yes" and ex.format_value(False) == "no"
    assert ex.format_value(math.inf) == "Inf"


def test_csv_order_and_sorting(tmp_path):
    p = ex.emit_feature_csv(_rows(), "loc", tmp_path, "stem", ";")
    assert p.name == "stem_loc.csv"
    lines = p.read_text().splitlines()
    head = lines[0].split(";")
    assert head[:8] == ["fi", "ci", "ii", "stm", "t_on", "t_off", "tier", "lab"]
    assert head[head.index("is_fin") + 1] == "grp_spk"
    assert lines[1].split(";")[2] == "0"
    assert "yes" in lines[2] and "NA" in lines[2]
    man = json.loads((tmp_path / "stem_loc.columns.json").read_text())
    kinds = {m["name"]: m["type"] for m in man}
    assert kinds["is_init"] == "flag" and kinds["c0"] == "numeric" and kinds["lab"] == "categorical"


def test_empty_table_header_only(tmp_path):
    p = ex.emit_feature_csv([], "glob", tmp_path, "s")
    assert p.read_text() == "\n"


def test_csv_reparse_exact():
    rows = _rows()
    back = ex.parse_csv(ex.render_csv(rows))
    by_ii = {int(r["ii"]): r for r in back}
    assert by_ii[0]["c0"] == float("%.12g" % (1 / 3))
    assert by_ii[1]["c1"] is None and by_ii[1]["is_init"] is True


def test_summary_stats_and_entropy():
    rows = [{"fi": 0, "ci": 0, "stm": "a", "tier": "w", "lab": l, "f": 2.0} for l in "xyxy"]
    rows += [{"fi": 0, "ci": 0, "stm": "a", "tier": "w", "lab": "z", "f": 2.0}]
    s = ex.summarize({"gnl_f0": rows[:4], "glob": [dict(r, lab="p") for r in rows]})
    assert len(s) == 1
    r = s[0]
    assert r["gnl_f0_w_lab_h"] == 1.0 and r["glob_lab_h"] == 0
    assert r["gnl_f0_w_f_sd"] == 0 and r["gnl_f0_w_f_iqr"] == 0 and r["gnl_f0_w_f_m"] == 2


def test_f0_file_roundtrip(tmp_path):
    t = np.arange(10) * 0.01
    y = 100 + np.arange(10) * 1.234567
    p = ex.emit_f0_file(tmp_path, "residual", "a.f0", t, [y])
    assert p.parent.name == "f0_residual"
    tr = read_f0_file(p)
    assert np.max(np.abs(tr.y_hz[0] - y)) < 1e-4


def test_archive_roundtrip_and_version(tmp_path):
    store = {"config": {"a": 1}, "data": {"x": np.arange(3)}, "val": {"v": np.float64(0.5)}}
    ex.write_archive(store, tmp_path / "a.json")
    back = ex.read_archive(tmp_path / "a.json")
    assert back["data"]["x"] == [0, 1, 2] and back["val"]["v"] == 0.5
    back["version"] = 99
    (tmp_path / "a.json").write_text(json.dumps(back))
    with pytest.raises(ex.ArchiveError):
        ex.read_archive(tmp_path / "a.json")


def test_log_sessions(tmp_path):
    p = tmp_path / "log.txt"
    ex.append_log(p, ["w1"], {"styl.glob.err_prop": 0.25},
                  datetime(2024, 1, 1, tzinfo=timezone.utc))
    ex.append_log(p, [], None, datetime(2024, 1, 2, tzinfo=timezone.utc))
    text = p.read_text()
    assert text.count("# session 2024-01-0") == 2
    assert "# validation\nstyl.glob.err_prop: 0.25" in text
