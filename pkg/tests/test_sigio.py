import numpy as np
import pytest

from prosody_features.sigio import (AudioSignal, SignalError, derive_grouping, match_files,
                                    read_f0_table, read_pulse_table, read_wav, write_f0_table,
                                    write_wav)


def test_f0_table_basic():
    tr = read_f0_table("0.00 120\n0.01 0\n0.02 121")
    assert len(tr.t) == 3 and tr.y_hz[0].tolist() == [120, 0, 121]


def test_f0_table_stereo():
    assert read_f0_table("0.00 120 200\n0.01 121 201").n_channels == 2


def test_f0_resample_200hz():
    t = np.arange(0, 0.2, 0.005)
    text = "".join(f"{a:.3f} {100 + 1000 * a:.3f}\n" for a in t)
    tr = read_f0_table(text)
    assert np.allclose(np.diff(tr.t), 0.01)
    assert np.allclose(tr.y_hz[0], 100 + 1000 * tr.t, atol=1e-6)


def test_f0_table_bad_row():
    with pytest.raises(SignalError):
        read_f0_table("0.00 120\n0.01 x")


def test_pulse_padding():
    p = read_pulse_table("0.1 0.1\n0.2 -1")
    assert p.stamps[0].tolist() == [0.1, 0.2] and p.stamps[1].tolist() == [0.1]


def test_pulse_empty_and_mono():
    assert read_pulse_table("").stamps == []
    assert len(read_pulse_table("0.1\n0.2\n").stamps) == 1


@pytest.mark.parametrize("stem,sep,labels,expected", [
    ("a_b_2", "_", ["spk", "", "stim"], {"spk": "a", "stim": "2"}),
    ("x", "_", ["spk"], {"spk": "x"}),
    ("a.b", r"(_|\.)", ["p", "q"], {"p": "a", "q": "b"}),
])
def test_grouping(stem, sep, labels, expected):
    assert derive_grouping(stem, sep, labels) == expected


def test_wav_roundtrip(tmp_path):
    x = 0.5 * np.sin(np.linspace(0, 20, 1600))
    write_wav(tmp_path / "a.wav", AudioSignal(16000, [x, -x]))
    sig = read_wav(tmp_path / "a.wav")
    assert sig.sample_rate == 16000 and len(sig.channels) == 2
    assert np.max(np.abs(sig.channels[0] - x)) < 1e-4


def test_f0_write_read():
    t = np.arange(5) * 0.01
    tr = read_f0_table(write_f0_table(t, [np.array([100, 0, 110.5, 120, 0])]))
    assert tr.y_hz[0].tolist() == [100, 0, 110.5, 120, 0]


def test_match_files_by_position(tmp_path):
    a = [tmp_path / "x.f0", tmp_path / "y.f0"]
    b = [tmp_path / "x.wav", tmp_path / "y.wav"]
    rows = match_files({"f0": a, "aud": b, "annot": []})
    assert [r["aud"].stem for r in rows] == ["x", "y"] and "annot" not in rows[0]
