"""ECG record ingestion: plain CSV and MIT-BIH format 212 signal files."""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError, FormatError, InputError


@dataclass
class EcgRecord:
    samples: np.ndarray
    fs: float = 360.0
    resolution_bits: int = 11
    annotations: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if not self.fs > 0:
            raise InputError("sampling rate must be positive")
        if self.annotations is not None:
            ann = np.asarray(self.annotations, dtype=np.int64)
            if ann.size and (ann.min() < 0 or ann.max() >= len(self.samples)):
                raise InputError("annotation index outside the record")
            self.annotations = np.sort(ann)


_FS_RE = re.compile(r"fs\s*=\s*([0-9.eE+-]+)")


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def load_csv(path, fs: float = 360.0) -> EcgRecord:
    """One sample per line, optional second column flagging R peaks (0/1).

    A first line that is not numeric is a header; ``fs=<Hz>`` anywhere in it
    overrides ``fs``.
    """
    path = Path(path)
    samples, flags, has_flags = [], [], False
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            row = [c.strip() for c in row if c.strip()]
            if not row:
                continue
            if lineno == 1 and not _is_number(row[0]):
                m = _FS_RE.search(",".join(row))
                if m:
                    fs = float(m.group(1))
                continue
            try:
                samples.append(float(row[0]))
                if len(row) > 1:
                    has_flags = True
                    flag = int(float(row[1]))
                    if flag not in (0, 1):
                        raise ValueError(f"annotation flag must be 0 or 1, got {row[1]!r}")
                    flags.append(flag)
                else:
                    flags.append(0)
            except ValueError as e:
                raise FormatError(f"{path}:{lineno}: cannot parse {row!r} ({e})") from None
    if not samples:
        raise FormatError(f"{path}: no samples")
    ann = np.flatnonzero(flags) if has_flags else None
    return EcgRecord(np.array(samples), fs=fs, annotations=ann, name=path.stem)


def load_annotations(path) -> np.ndarray:
    """Sidecar of R-peak sample indices, one per line (header optional)."""
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        tok = line.split(",")[0].strip()
        if not tok:
            continue
        if lineno == 1 and not _is_number(tok):
            continue
        try:
            out.append(int(float(tok)))
        except ValueError:
            raise FormatError(f"{path}:{lineno}: bad annotation index {tok!r}") from None
    return np.array(out, dtype=np.int64)


def decode_212(buf) -> np.ndarray:
    """Unpack format-212 bytes into ``(n, 2)`` signed 12-bit samples.

    Each 3-byte group holds two samples: the first is the low byte plus the
    low nibble of byte 1, the second is byte 2 plus the high nibble of byte 1.
    """
    b = np.frombuffer(bytes(buf), dtype=np.uint8)
    if b.size % 3:
        raise FormatError(f"format 212 data length {b.size} is not a multiple of 3")
    b = b.reshape(-1, 3).astype(np.int32)
    s0 = ((b[:, 1] & 0x0F) << 8) | b[:, 0]
    s1 = ((b[:, 1] & 0xF0) << 4) | b[:, 2]
    out = np.stack([s0, s1], axis=1)
    return np.where(out >= 2048, out - 4096, out)


def load_mit212(path, channel: int = 0, n_samples: int | None = None, fs: float = 360.0,
                gain: float = 200.0, baseline: int = 1024, annotations=None) -> EcgRecord:
    """Read one channel of a two-signal MIT-BIH ``.dat`` file in physical units."""
    if channel not in (0, 1):
        raise ConfigError(f"channel must be 0 or 1, got {channel}")
    data = Path(path).read_bytes()
    if n_samples is None:
        if len(data) % 3:
            raise FormatError(f"{path}: {len(data)} bytes is not a whole number of sample pairs")
        n_samples = len(data) // 3
    need = 3 * n_samples
    if len(data) < need:
        raise FormatError(f"{path}: {len(data)} bytes, need {need} for {n_samples} samples")
    raw = decode_212(data[:need])[:, channel]
    ann = None
    if annotations is not None:
        ann = load_annotations(annotations) if isinstance(annotations, (str, Path)) else annotations
        ann = np.asarray(ann)
        ann = ann[ann < n_samples]
    return EcgRecord((raw - baseline) / gain, fs=fs, annotations=ann, name=Path(path).stem)


def encode_212(samples) -> bytes:
    """Pack ``(n, 2)`` signed 12-bit samples into format-212 bytes."""
    s = np.asarray(samples, dtype=np.int64).reshape(-1, 2) & 0xFFF
    out = np.empty((s.shape[0], 3), dtype=np.uint8)
    out[:, 0] = s[:, 0] & 0xFF
    out[:, 1] = ((s[:, 0] >> 8) & 0x0F) | (((s[:, 1] >> 8) & 0x0F) << 4)
    out[:, 2] = s[:, 1] & 0xFF
    return out.tobytes()


def write_signal_csv(path, samples, annotations=None, fs=None):
    flags = None
    if annotations is not None:
        flags = np.zeros(len(samples), dtype=int)
        flags[np.asarray(annotations, dtype=int)] = 1
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = ["sample"] + (["rpeak"] if flags is not None else [])
        if fs is not None:
            head[0] = f"sample fs={fs:g}"
        w.writerow(head)
        for i, v in enumerate(samples):
            w.writerow([repr(float(v))] + ([int(flags[i])] if flags is not None else []))
