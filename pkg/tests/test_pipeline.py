import json
import shutil

import numpy as np
import pytest

from prosody_features import export as ex
from prosody_features.cli import main
from prosody_features.sigio import read_f0_file

from corpus import FULL_NAVIGATION, make_corpus, write_config

SETS = ("glob", "loc", "bnd", "gnl_f0", "gnl_en", "rhy_f0", "rhy_en", "voice")


@pytest.fixture(scope="module")
def done_run(tmp_path_factory):
    root = make_corpus(tmp_path_factory.mktemp("run"), n=4)
    cfg = write_config(root)
    assert main(["-c", str(cfg)]) == 0
    return root


def test_all_tables_written(done_run):
    out = done_run / "out"
    for s in SETS + ("summary",):
        p = out / f"prosody_{s}.csv"
        assert p.exists(), s
        assert (out / f"prosody_{s}.columns.json").exists()
    rows = ex.parse_csv((out / "prosody_glob.csv").read_text())
    assert {r["stm"] for r in rows} == {"spka_00", "spkb_01", "spka_02", "spkb_03"}
    assert {r["grp_spk"] for r in rows} == {"spka", "spkb"}
    assert all(r["class"] is not None for r in rows)
    assert (out / "prosodylog.txt").exists()


def test_augmented_tiers_written(done_run):
    text = (done_run / "annot" / "spka_00.TextGrid").read_text()
    for t in ("chunk_1", "syl_1", "syl_bnd_1", "glob_1", "acc_1"):
        assert f'"{t}"' in text, t


def test_f0_outputs_reread(done_run):
    out = done_run / "out"
    arch = ex.read_archive(out / "prosody_archive.json")
    for kind in ("preproc", "residual", "resyn"):
        assert (out / f"f0_{kind}" / "spka_00.f0").exists()
    tr = read_f0_file(out / "f0_preproc" / "spka_00.f0")
    fi = [f["stm"] for f in arch["data"]["files"]].index("spka_00")
    y = np.array(arch["data"]["files"][fi]["channels"][0]["y"], float)
    bv = arch["data"]["files"][fi]["channels"][0]["bv"]
    hz = bv * 2 ** (y / 12)
    assert np.max(np.abs(tr.y_hz[0] - hz)) < 1e-4


def test_log_has_validation(done_run):
    log = next((done_run / "out").glob("*log.txt")).read_text()
    assert "# validation" in log
    assert "styl.glob.err_prop" in log and "styl.loc.rms_mean" in log


def test_resume_skips_done_stages(done_run, tmp_path):
    root = tmp_path / "c"
    shutil.copytree(done_run, root)
    arch = root / "out" / "prosody_archive.json"
    before = json.loads(arch.read_text())
    assert main(["-c", str(root / "config.json")]) == 0
    after = json.loads(arch.read_text())
    assert after["data"] == before["data"]
    log = (root / "out" / "prosodylog.txt").read_text()
    assert log.count("# session") == 2


def test_from_scratch_rebuilds(done_run, tmp_path):
    root = tmp_path / "c"
    shutil.copytree(done_run, root)
    arch = root / "out" / "prosody_archive.json"
    data = json.loads(arch.read_text())
    data["data"]["sets"]["glob"] = []
    arch.write_text(json.dumps(data))
    assert main(["-c", str(root / "config.json")]) == 0
    assert json.loads(arch.read_text())["data"]["sets"]["glob"] == []
    assert main(["-c", str(root / "config.json"), "--from-scratch"]) == 0
    assert json.loads(arch.read_text())["data"]["sets"]["glob"]


def test_archive_version_mismatch_exit_2(done_run, tmp_path):
    root = tmp_path / "c"
    shutil.copytree(done_run, root)
    arch = root / "out" / "prosody_archive.json"
    data = json.loads(arch.read_text())
    data["version"] = 999
    arch.write_text(json.dumps(data))
    assert main(["-c", str(root / "config.json")]) == 2


def test_all_flags_zero(tmp_path):
    make_corpus(tmp_path, n=1)
    cfg = write_config(tmp_path, navigate={k: 0 for k in FULL_NAVIGATION})
    assert main(["-c", str(cfg)]) == 0
    assert not (tmp_path / "out").exists()


def test_missing_config_exit_2(tmp_path):
    assert main(["-c", str(tmp_path / "nope.json")]) == 2


def test_config_error_exit_1(tmp_path):
    make_corpus(tmp_path, n=1)
    cfg = write_config(tmp_path, styl={"glob": {"decl_win": -1}})
    assert main(["-c", str(cfg)]) == 1


def test_missing_input_dir_exit_2(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["-c", str(cfg)]) == 2


def test_parallel_matches_serial(tmp_path):
    outs = []
    for jobs in ("1", "3"):
        root = make_corpus(tmp_path / jobs, n=3)
        cfg = write_config(root)
        assert main(["-c", str(cfg), "--jobs", jobs]) == 0
        outs.append({p.name: p.read_bytes() for p in (root / "out").glob("*.csv")})
    assert outs[0] == outs[1]
