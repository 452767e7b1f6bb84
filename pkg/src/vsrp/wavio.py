"""Multichannel PCM WAV reading and writing (16- and 24-bit) on top of ``wave``."""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np


def write_wav(path, data, fs: int, bits: int = 24) -> None:
    """Write ``data`` shaped ``(channels, samples)`` with values in [-1, 1]."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if bits not in (16, 24):
        raise ValueError("only 16- and 24-bit PCM are supported")
    scale = 2 ** (bits - 1) - 1
    ints = np.round(np.clip(data, -1.0, 1.0) * scale).astype("<i4").T  # (samples, channels)
    if bits == 16:
        raw = ints.astype("<i2").tobytes()
    else:
        raw = ints.reshape(-1, 1).view(np.uint8).reshape(-1, 4)[:, :3].tobytes()
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(data.shape[0])
        fh.setsampwidth(bits // 8)
        fh.setframerate(int(fs))
        fh.writeframes(raw)


def read_wav(path) -> tuple[int, np.ndarray]:
    """Return ``(fs, data)`` with ``data`` shaped ``(channels, samples)`` in [-1, 1]."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with wave.open(str(path), "rb") as fh:
        channels = fh.getnchannels()
        width = fh.getsampwidth()
        fs = fh.getframerate()
        raw = fh.readframes(fh.getnframes())
    if len(raw) % (channels * width):
        raise ValueError(f"{path}: truncated sample data")
    if width == 2:
        ints = np.frombuffer(raw, dtype="<i2").astype(np.int32)
    elif width == 3:
        b = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
        ints = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        ints = np.where(ints >= 1 << 23, ints - (1 << 24), ints)
    else:
        raise ValueError(f"{path}: unsupported sample width {8 * width} bits")
    scale = 2 ** (8 * width - 1) - 1
    return fs, (ints.reshape(-1, channels).T / scale)
