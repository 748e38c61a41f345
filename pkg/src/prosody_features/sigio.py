"""Audio, f0 and pulse table input; file-name grouping."""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.io import wavfile

logger = logging.getLogger(__name__)

F0_STEP = 0.01


class SignalError(ValueError):
    """Malformed signal or table input."""


@dataclass
class AudioSignal:
    sample_rate: int
    channels: list[np.ndarray]

    @property
    def duration(self) -> float:
        return len(self.channels[0]) / self.sample_rate if self.channels else 0.0


@dataclass
class F0Track:
    """f0 on the 0.01 s grid; 0 marks undefined samples."""
    t: np.ndarray
    y_hz: list[np.ndarray]
    # filled by preprocessing, per channel
    y: list[np.ndarray] = field(default_factory=list)
    r: list[np.ndarray] = field(default_factory=list)
    bv: list[float] = field(default_factory=list)

    @property
    def n_channels(self) -> int:
        return len(self.y_hz)


@dataclass
class PulseTrack:
    stamps: list[np.ndarray]


# ---------------------------------------------------------------- audio

def read_wav(path: str | Path) -> AudioSignal:
    fs, data = wavfile.read(str(path))
    if data.dtype == np.uint8:
        x = (data.astype(np.float64) - 128.0) / 128.0
    elif np.issubdtype(data.dtype, np.integer):
        # 24-bit PCM is returned left-aligned in int32
        x = data.astype(np.float64) / float(np.iinfo(data.dtype).max + 1)
    else:
        x = data.astype(np.float64)
    if x.ndim == 1:
        x = x[:, None]
    return AudioSignal(int(fs), [np.ascontiguousarray(x[:, c]) for c in range(x.shape[1])])


def write_wav(path: str | Path, sig: AudioSignal, subtype: str = "PCM_16") -> None:
    x = np.stack(sig.channels, axis=1) if len(sig.channels) > 1 else sig.channels[0]
    if subtype == "PCM_16":
        data = np.clip(np.round(x * 32768.0), -32768, 32767).astype(np.int16)
    elif subtype == "FLOAT":
        data = x.astype(np.float32)
    else:
        raise ValueError(f"unsupported wav subtype {subtype!r}")
    wavfile.write(str(path), sig.sample_rate, data)


# ---------------------------------------------------------------- tables

def _numeric_rows(text: str, what: str) -> np.ndarray:
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if not parts:
            continue
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise SignalError(f"{what} row {lineno}: non-numeric entry in {line!r}") from None
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise SignalError(f"{what} row {lineno}: expected {width} columns, found {len(vals)}")
        rows.append(vals)
    if not rows:
        return np.zeros((0, 0))
    return np.asarray(rows, dtype=float)


def read_f0_table(text: str) -> F0Track:
    tab = _numeric_rows(text, "f0 table")
    if tab.size == 0:
        return F0Track(np.zeros(0), [])
    if tab.shape[1] < 2:
        raise SignalError("f0 table: needs a time column and at least one f0 column")
    t, y = tab[:, 0], tab[:, 1:]
    if np.any(np.diff(t) <= 0):
        raise SignalError("f0 table: time column is not strictly increasing")
    y = np.where(y > 0, y, 0.0)
    step = np.median(np.diff(t)) if len(t) > 1 else F0_STEP
    if len(t) > 1 and (abs(step - F0_STEP) > 1e-6 or np.any(np.abs(np.diff(t) - step) > 1e-6)):
        t, y = _resample_nearest(t, y)
    else:
        t = np.round(t / F0_STEP) * F0_STEP
    return F0Track(t, [np.ascontiguousarray(y[:, c]) for c in range(y.shape[1])])


def _resample_nearest(t: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t0 = math.ceil(round(t[0] / F0_STEP, 9)) * F0_STEP
    n = int(math.floor(round((t[-1] - t0) / F0_STEP, 9))) + 1
    grid = t0 + F0_STEP * np.arange(max(n, 0))
    grid = np.round(grid, 10)
    idx = np.searchsorted(t, grid)
    idx = np.clip(idx, 1, len(t) - 1)
    left = t[idx - 1]
    right = t[idx]
    idx = np.where(grid - left <= right - grid, idx - 1, idx)
    return grid, y[idx]


def read_pulse_table(text: str) -> PulseTrack:
    tab = _numeric_rows(text, "pulse table")
    if tab.size == 0:
        return PulseTrack([])
    out = []
    for c in range(tab.shape[1]):
        col = tab[:, c]
        col = col[col != -1]
        if np.any(col < 0):
            raise SignalError(f"pulse table channel {c + 1}: negative time stamp")
        if np.any(np.diff(col) <= 0):
            raise SignalError(f"pulse table channel {c + 1}: time stamps not strictly increasing")
        out.append(col)
    return PulseTrack(out)


def read_f0_file(path: str | Path) -> F0Track:
    return read_f0_table(Path(path).read_text(encoding="utf-8-sig"))


def read_pulse_file(path: str | Path) -> PulseTrack:
    return read_pulse_table(Path(path).read_text(encoding="utf-8-sig"))


def write_f0_table(t: np.ndarray, ys: list[np.ndarray]) -> str:
    cols = np.column_stack([t] + list(ys))
    return "".join(" ".join(f"{v:.6f}" if j else f"{v:.2f}" for j, v in enumerate(row)) + "\n"
                   for row in cols)


# ---------------------------------------------------------------- files

def derive_grouping(stem: str, sep: str, labels: list[str]) -> dict[str, str]:
    pattern = re.compile(sep)
    parts = pattern.split(stem)
    if pattern.groups:
        parts = parts[::pattern.groups + 1]
    if len(parts) < len(labels):
        logger.warning("file stem %r has %d parts, %d grouping labels given",
                       stem, len(parts), len(labels))
    out = {}
    for i, lab in enumerate(labels):
        if lab:
            out[lab] = parts[i] if i < len(parts) else ""
    return out


def list_files(directory: str | Path, ext: str) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        return []
    ext = ext.lstrip(".")
    return sorted(p for p in d.iterdir() if p.is_file() and p.suffix.lstrip(".") == ext)


def match_files(lists: dict[str, list[Path]]) -> list[dict[str, Path]]:
    """Pair files across sources by sorted position; warn when stems differ."""
    lists = {k: v for k, v in lists.items() if v}
    if not lists:
        return []
    n = min(len(v) for v in lists.values())
    if any(len(v) != n for v in lists.values()):
        logger.warning("unequal file counts per source: %s",
                       {k: len(v) for k, v in lists.items()})
    out = []
    for i in range(n):
        row = {k: v[i] for k, v in lists.items()}
        stems = {p.stem for p in row.values()}
        if len(stems) > 1:
            logger.warning("file stems differ at position %d: %s", i, sorted(stems))
        out.append(row)
    return out
