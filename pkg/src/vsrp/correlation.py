"""Framing and per-pair cross-correlation with optional PHAT weighting.

Lag convention: ``phi[lag] = sum_n s1[n] * s2[n + lag]``, so a signal that
reaches the second microphone ``k`` samples later peaks at ``lag = +k``,
matching the sign of the quantized TDoA.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

PHAT_FLOOR = 1e-12


@dataclass(frozen=True)
class FramePlan:
    length: int = 4096
    hop: int = 2048

    def __post_init__(self):
        if self.length < 1 or self.hop < 1:
            raise ValueError("frame length and hop must be positive")

    def num_frames(self, num_samples: int) -> int:
        if num_samples < self.length:
            return 0
        return (num_samples - self.length) // self.hop + 1

    def starts(self, num_samples: int) -> np.ndarray:
        return np.arange(self.num_frames(num_samples)) * self.hop


def frame_signal(signal, plan: FramePlan) -> np.ndarray:
    """Split along the last axis into overlapping rectangular frames.

    A ``(T,)`` input gives ``(F, length)``; ``(M, T)`` gives ``(F, M, length)``.
    """
    signal = np.asarray(signal)
    n = signal.shape[-1]
    if n < plan.length:
        raise ValueError(f"signal has {n} samples, shorter than one {plan.length}-sample frame")
    windows = sliding_window_view(signal, plan.length, axis=-1)[..., ::plan.hop, :]
    # (..., F, length) -> (F, ..., length)
    return np.moveaxis(windows, -2, 0)


def cross_correlation_time(s1, s2, max_lag: int) -> np.ndarray:
    """Direct-summation correlation for lags ``-max_lag..max_lag``.

    Samples outside the frame count as zero.
    """
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    n = s1.size
    if s2.size != n:
        raise ValueError("frames must have equal length")
    if max_lag >= n:
        raise ValueError(f"max_lag {max_lag} must be smaller than the frame length {n}")
    out = np.empty(2 * max_lag + 1)
    for i, lag in enumerate(range(-max_lag, max_lag + 1)):
        if lag >= 0:
            out[i] = np.dot(s1[: n - lag], s2[lag:])
        else:
            out[i] = np.dot(s1[-lag:], s2[: n + lag])
    return out


def fft_size(frame_length: int) -> int:
    """Transform length avoiding circular wrap: a power of two >= 2x the frame."""
    return 1 << int(np.ceil(np.log2(2 * frame_length)))


def phat_weight(cross_spectrum: np.ndarray) -> np.ndarray:
    """Normalize each bin to unit magnitude; bins below the floor get weight zero."""
    mag = np.abs(cross_spectrum)
    peak = mag.max(axis=-1, keepdims=True) if mag.size else mag
    keep = mag > PHAT_FLOOR * peak
    out = np.zeros_like(cross_spectrum)
    np.divide(cross_spectrum, mag, out=out, where=keep)
    return out


def _lags_from_circular(r: np.ndarray, max_lag: int) -> np.ndarray:
    return np.concatenate([r[..., r.shape[-1] - max_lag:], r[..., : max_lag + 1]], axis=-1)


def gcc(s1, s2, max_lag: int, phat: bool = True, return_degenerate: bool = False):
    """Frequency-domain cross-correlation, aligned with ``cross_correlation_time``.

    With ``phat`` the cross-spectrum is whitened. An all-zero frame then has
    no usable bins; the result is all zeros and, when ``return_degenerate``
    is set, the flag returned alongside is True.
    """
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    if s1.shape != s2.shape:
        raise ValueError("frames must have equal length")
    if max_lag >= s1.size:
        raise ValueError(f"max_lag {max_lag} must be smaller than the frame length {s1.size}")
    nfft = fft_size(s1.size)
    cross = np.conj(np.fft.rfft(s1, nfft)) * np.fft.rfft(s2, nfft)
    degenerate = False
    if phat:
        cross = phat_weight(cross)
        degenerate = not np.any(cross)
    phi = _lags_from_circular(np.fft.irfft(cross, nfft), max_lag)
    return (phi, degenerate) if return_degenerate else phi


@dataclass(frozen=True)
class CorrelationSet:
    """Correlation per pair for one frame: ``phi[p, lag + max_lag]``."""

    phi: np.ndarray
    max_lag: int
    phat: bool
    degenerate: np.ndarray

    @property
    def num_pairs(self) -> int:
        return self.phi.shape[0]

    def at(self, p: int, lag: int) -> float:
        if abs(lag) > self.max_lag:
            raise LagRangeError(f"lag {lag} outside computed range +-{self.max_lag}")
        return float(self.phi[p, lag + self.max_lag])

    def scaled(self, factor: float) -> "CorrelationSet":
        return CorrelationSet(self.phi * factor, self.max_lag, self.phat, self.degenerate)


class LagRangeError(ValueError):
    """A table requested a lag outside the correlation's computed range."""


def correlate_frame(frame: np.ndarray, pairs, max_lag: int, phat: bool = True) -> CorrelationSet:
    """Correlations of all microphone pairs for one ``(M, length)`` frame."""
    frame = np.asarray(frame, dtype=float)
    n = frame.shape[-1]
    if max_lag >= n:
        raise ValueError(f"max_lag {max_lag} must be smaller than the frame length {n}")
    nfft = fft_size(n)
    spectra = np.fft.rfft(frame, nfft, axis=-1)
    idx = np.asarray(pairs)
    cross = np.conj(spectra[idx[:, 0]]) * spectra[idx[:, 1]]
    if phat:
        cross = phat_weight(cross)
        degenerate = ~np.any(cross, axis=-1)
    else:
        degenerate = np.zeros(len(idx), dtype=bool)
    phi = _lags_from_circular(np.fft.irfft(cross, nfft, axis=-1), max_lag)
    phi.setflags(write=False)
    return CorrelationSet(phi, int(max_lag), bool(phat), degenerate)


def default_max_lag(array, fs: float, c: float, margin: int = 1) -> int:
    """Widest lag any grid point can produce for ``array``, plus ``margin``."""
    return int(array.max_lags(fs, c).max()) + int(margin)
